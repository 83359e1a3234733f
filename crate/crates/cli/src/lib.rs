//! Library half of the command-line front end: the model-file format.
//!
//! The binary parses flags and prints reports; everything that must be
//! testable without spawning a process — loading, validating and re-emitting
//! model files — lives here.

pub mod modelfile;
