//! Fixtures shared by the benchmarks.

use arcfem::{assemble_system, BlockSystem, Method, ProblemSpec};

pub fn system(example: &str, method: Method, n: usize) -> BlockSystem {
    let spec = ProblemSpec::example(example, method, n).expect("built-in example");
    assemble_system(&spec).expect("assembly of a built-in example")
}
