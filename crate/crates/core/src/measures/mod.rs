//! Positive measures stored as natural-log masses on the full c-adic tree.

mod ball;
mod cascade;
mod cpc;
mod gibbs;
mod io;
mod multinomial;

pub use ball::{ball_mass, MassBracket};
pub use cascade::{build_cascade, CascadeSpec, Generator};
pub use cpc::{build_cpc, CpcSpec};
pub use gibbs::{build_gibbs_finite, GibbsSpec, Potential};
pub use io::{read_measure, write_binary, write_measure};
pub use multinomial::{build_multinomial, tilt_multinomial, MultinomialSpec};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgrid::{CAdicBox, GridGeometry};
use crate::error::{Error, Result};
use crate::numerics::LogAcc;

/// Tagged description of any buildable measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureSpec {
    Multinomial(MultinomialSpec),
    Cascade(CascadeSpec),
    Cpc(CpcSpec),
    Gibbs(GibbsSpec),
}

impl MeasureSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            MeasureSpec::Multinomial(_) => "multinomial",
            MeasureSpec::Cascade(_) => "cascade",
            MeasureSpec::Cpc(_) => "cpc",
            MeasureSpec::Gibbs(_) => "gibbs",
        }
    }

    pub fn build(&self, j_max: u32) -> Result<BoxMeasure> {
        match self {
            MeasureSpec::Multinomial(s) => build_multinomial(s, j_max),
            MeasureSpec::Cascade(s) => {
                let mut s = s.clone();
                s.depth = j_max;
                build_cascade(&s)
            }
            MeasureSpec::Cpc(s) => build_cpc(s, j_max),
            MeasureSpec::Gibbs(s) => {
                let mut s = s.clone();
                s.depth = j_max;
                build_gibbs_finite(&s, j_max)
            }
        }
    }
}

/// A measure known through log μ(I_{j,k}) for every box with j ≤ j_max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxMeasure {
    pub geom: GridGeometry,
    pub j_max: u32,
    pub spec: Option<MeasureSpec>,
    pub seed: Option<u64>,
    log_mass: Vec<Vec<f64>>,
}

impl BoxMeasure {
    /// Assembles a measure from finest-generation log-masses by upward log-sum-exp.
    pub fn from_finest(
        geom: GridGeometry,
        j_max: u32,
        finest: Vec<f64>,
        spec: Option<MeasureSpec>,
        seed: Option<u64>,
    ) -> Result<Self> {
        geom.check_depth(j_max)?;
        if finest.len() as u64 != geom.box_count(j_max) {
            return Err(Error::Invalid(format!(
                "expected {} finest masses, got {}",
                geom.box_count(j_max),
                finest.len()
            )));
        }
        let mut levels = vec![finest];
        for j in (0..j_max).rev() {
            let child = levels.last().expect("nonempty");
            let parent = coarsen(geom, j, child);
            levels.push(parent);
        }
        levels.reverse();
        Ok(Self { geom, j_max, spec, seed, log_mass: levels })
    }

    /// Assembles a measure from all generations at once.
    pub fn from_levels(
        geom: GridGeometry,
        log_mass: Vec<Vec<f64>>,
        spec: Option<MeasureSpec>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let j_max = log_mass.len().checked_sub(1).ok_or_else(|| Error::Invalid("no generations".into()))? as u32;
        geom.check_depth(j_max)?;
        for (j, level) in log_mass.iter().enumerate() {
            if level.len() as u64 != geom.box_count(j as u32) {
                return Err(Error::Invalid(format!("generation {j} has {} entries", level.len())));
            }
        }
        Ok(Self { geom, j_max, spec, seed, log_mass })
    }

    pub fn kind(&self) -> &str {
        self.spec.as_ref().map_or("custom", MeasureSpec::kind)
    }

    pub fn total_log_mass(&self) -> f64 {
        self.log_mass[0][0]
    }

    /// All log-masses of generation j in row-major order.
    pub fn level(&self, j: u32) -> Result<&[f64]> {
        self.log_mass
            .get(j as usize)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Resolution(format!("generation {j} beyond stored depth {}", self.j_max)))
    }

    pub(crate) fn levels(&self) -> &[Vec<f64>] {
        &self.log_mass
    }

    /// Stored log μ(I_{j,k}).
    pub fn box_mass(&self, b: &CAdicBox) -> Result<f64> {
        if b.c != self.geom.c || b.k.len() != self.geom.d {
            return Err(Error::Domain("box geometry differs from measure geometry".into()));
        }
        Ok(self.level(b.j)?[b.linear_index()])
    }

    /// Largest relative additivity defect |lse(children) − parent| / max(1,|parent|).
    pub fn additivity_defect(&self) -> f64 {
        (0..self.j_max)
            .map(|j| {
                let parent = coarsen(self.geom, j, &self.log_mass[j as usize + 1]);
                parent
                    .iter()
                    .zip(&self.log_mass[j as usize])
                    .map(|(a, b)| {
                        if a == b {
                            0.0
                        } else {
                            (a - b).abs() / b.abs().max(1.0)
                        }
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Rescales so the total mass is one.
    pub fn normalized(mut self) -> Self {
        let t = self.total_log_mass();
        for level in &mut self.log_mass {
            level.iter_mut().for_each(|v| *v -= t);
        }
        self
    }

    /// Reads base c^m as m base-c generations at a time.
    pub fn rebase(&self, m: u32) -> Result<BoxMeasure> {
        if m == 0 {
            return Err(Error::Domain("rebase factor must be positive".into()));
        }
        let c = self.geom.c.checked_pow(m).ok_or_else(|| Error::Domain("base overflow".into()))?;
        let geom = GridGeometry::new(c, self.geom.d)?;
        let j_max = self.j_max / m;
        let fine_geom = self.geom;
        let levels = (0..=j_max)
            .map(|jj| {
                let j = jj * m;
                let src = &self.log_mass[j as usize];
                let mut out = vec![0.0; src.len()];
                for (idx, &v) in src.iter().enumerate() {
                    let b = CAdicBox::from_linear(fine_geom, j, idx);
                    let nb = CAdicBox { c, j: jj, k: b.k };
                    out[nb.linear_index()] = v;
                }
                out
            })
            .collect();
        BoxMeasure::from_levels(geom, levels, None, self.seed)
    }
}

/// Log-masses of generation j from those of generation j+1.
fn coarsen(geom: GridGeometry, j: u32, child: &[f64]) -> Vec<f64> {
    let c = geom.c as usize;
    let n_parent = geom.box_count(j) as usize;
    if geom.d == 1 {
        return child
            .par_chunks(c)
            .map(|kids| kids.iter().fold(LogAcc::default(), |mut a, &v| {
                a.push(v);
                a
            }).value())
            .collect();
    }
    (0..n_parent)
        .into_par_iter()
        .map(|p| {
            let b = CAdicBox::from_linear(geom, j, p);
            let mut acc = LogAcc::default();
            for kid in b.children() {
                acc.push(child[kid.linear_index()]);
            }
            acc.value()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rebase_groups_generations() {
        let spec = MultinomialSpec::new(2, vec![vec![0.7, 0.3]]).unwrap();
        let mu = build_multinomial(&spec, 6).unwrap();
        let mu4 = mu.rebase(2).unwrap();
        assert_eq!(mu4.geom.c, 4);
        assert_eq!(mu4.j_max, 3);
        let b = CAdicBox { c: 4, j: 1, k: vec![3] };
        assert!((mu4.box_mass(&b).unwrap() - (0.3f64 * 0.3).ln()).abs() < 1e-14);
    }

    #[test]
    fn box_mass_beyond_depth_is_resolution_error() {
        let spec = MultinomialSpec::uniform(2, 1);
        let mu = build_multinomial(&spec, 4).unwrap();
        let b = CAdicBox { c: 2, j: 5, k: vec![0] };
        assert!(matches!(mu.box_mass(&b), Err(Error::Resolution(_))));
    }
}
