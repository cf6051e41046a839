//! Compiler and runtime for a small dynamically typed plotting language:
//! static type inference over a lattice, GLSL code generation for the
//! per-pixel part of a program and a CPU reference interpreter.

pub mod ast;
pub mod backend;
pub mod builtins;
pub mod codegen;
pub mod corpus;
pub mod depgraph;
pub mod glsl;
pub mod harness;
pub mod infer;
pub mod interp;
pub mod lower;
pub mod parser;
pub mod pipeline;
pub mod pixels;
pub mod printer;
pub mod types;
pub mod value;
