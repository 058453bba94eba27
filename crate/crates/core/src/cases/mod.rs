pub mod euler;
pub mod ode;
