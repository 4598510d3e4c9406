//! CSV export of couplings and duals. Potentials serialise to JSON via serde
//! as `{"slopes": [[...]], "intercepts": [...]}`.

use std::io::Write;

use super::{Coupling, DualSolution};
use crate::error::Result;

/// Writes `i,j,mass` rows in entry order.
pub fn coupling_to_csv<W: Write>(coupling: &Coupling, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "mass"])?;
    for e in coupling.entries() {
        w.write_record([e.i.to_string(), e.j.to_string(), e.mass.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `side,index,potential` rows (`side` is `src` or `tgt`).
pub fn dual_to_csv<W: Write>(dual: &DualSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["side", "index", "potential"])?;
    for (side, values) in [("src", &dual.u), ("tgt", &dual.w)] {
        for (k, v) in values.iter().enumerate() {
            w.write_record([side.to_string(), k.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
