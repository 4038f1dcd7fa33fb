//! Recession directions of H-polyhedra.

use crate::error::{Error, Result};
use crate::geometry::lp::{LpOutcome, LpProblem, LpSolver, Sense};
use crate::geometry::polytope::HPolyhedron;
use crate::linalg::RatVec;
use crate::rational::{rone, rzero};
use num_traits::Signed;

/// Finds a nonzero direction `u` with `A·u <= 0` on the inequalities and
/// `E·u = 0` on the equations, or `None` when the polyhedron is bounded.
/// The recession cone is probed inside the unit box, one signed coordinate
/// objective at a time; a nonzero optimum in any of them is a ray.
pub fn recession_direction(c: &HPolyhedron) -> Result<Option<RatVec>> {
    if !c.is_feasible()? {
        return Err(Error::EmptyInput("recession direction of an empty polyhedron"));
    }
    let d = c.dim();
    if d == 0 {
        return Ok(None);
    }
    let mut cone = LpProblem::new(d);
    for (a, _) in c.ineqs() {
        cone.add_ineq(a.clone(), rzero());
    }
    for (a, _) in c.eqs() {
        cone.add_eq(a.clone(), rzero());
    }
    for j in 0..d {
        let mut hi = vec![rzero(); d];
        hi[j] = rone();
        cone.add_ineq(hi, rone());
        let mut lo = vec![rzero(); d];
        lo[j] = -rone();
        cone.add_ineq(lo, rone());
    }
    let mut solver = LpSolver::new(&cone)?;
    for j in 0..d {
        let mut obj = vec![rzero(); d];
        obj[j] = rone();
        for sense in [Sense::Maximize, Sense::Minimize] {
            match solver.optimize(&obj, sense)? {
                LpOutcome::Optimal { x, value } => {
                    let escapes = match sense {
                        Sense::Maximize => value.is_positive(),
                        Sense::Minimize => value.is_negative(),
                    };
                    if escapes {
                        return Ok(Some(x));
                    }
                }
                other => {
                    return Err(Error::Malformed(format!(
                        "box-bounded recession cone probe returned {other:?}"
                    )))
                }
            }
        }
    }
    Ok(None)
}
