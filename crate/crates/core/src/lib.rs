pub mod convergence;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod scan;
pub mod theory;
