pub mod distance;
pub mod ellipsoid;
pub mod hull;
pub mod lp;
pub mod polytope;
pub mod recession;
