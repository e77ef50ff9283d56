//! Criterion benchmarks for the solver, the certificate and the tracker
//! update. Run with `cargo bench -p hinge-penalty-bench`.
