//! Pilot assignment and dynamic cooperation clustering.
//!
//! The joint algorithm:
//!
//! 1. every UE picks as master the AP with the largest large-scale gain;
//! 2. the first `τ_p` UEs take pilots `0..τ_p`; each later UE takes the pilot
//!    with the least summed gain of its current users at the new UE's
//!    master AP;
//! 3. every AP serves, on each pilot, the UE with the largest gain to it
//!    among the UEs using that pilot, and keeps serving the UEs it is master
//!    of.
//!
//! Ties resolve to the lowest index. Because of step 3, an AP normally serves
//! at most one UE per pilot; the only exception is a UE whose master AP hears
//! a stronger co-pilot UE.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::CVector;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Association {
    pilot_of: Vec<usize>,
    master_ap: Vec<Option<usize>>,
    /// `M_k`, sorted.
    serving: Vec<Vec<usize>>,
    /// `D_l`, sorted.
    served: Vec<Vec<usize>>,
    num_pilots: usize,
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Runs the joint pilot assignment / clustering algorithm on a `K × L` gain
/// table.
pub fn assign_pilots_and_clusters(beta: &DMatrix<f64>, num_pilots: usize) -> Result<Association> {
    if num_pilots == 0 {
        return Err(Error::config("pilot_samples", "must be at least 1"));
    }
    let (k_count, l_count) = beta.shape();
    let masters: Vec<usize> = (0..k_count)
        .map(|k| argmax(beta.row(k).iter().copied()).expect("at least one AP"))
        .collect();

    let mut pilot_of = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let pilot = if k < num_pilots {
            k
        } else {
            let master = masters[k];
            let interference = (0..num_pilots).map(|t| {
                -pilot_of
                    .iter()
                    .enumerate()
                    .filter(|&(_, &p)| p == t)
                    .map(|(i, _)| beta[(i, master)])
                    .sum::<f64>()
            });
            argmax(interference).expect("at least one pilot")
        };
        pilot_of.push(pilot);
    }

    let mut member = vec![vec![false; l_count]; k_count];
    for (k, &l) in masters.iter().enumerate() {
        member[k][l] = true;
    }
    for l in 0..l_count {
        for t in 0..num_pilots {
            let users: Vec<usize> = (0..k_count).filter(|&k| pilot_of[k] == t).collect();
            if let Some(best) = argmax(users.iter().map(|&k| beta[(k, l)])) {
                member[users[best]][l] = true;
            }
        }
    }
    let serving = member
        .iter()
        .map(|row| (0..l_count).filter(|&l| row[l]).collect())
        .collect();
    let mut assoc = Association::from_sets(pilot_of, serving, l_count, num_pilots)?;
    assoc.master_ap = masters.into_iter().map(Some).collect();
    Ok(assoc)
}

impl Association {
    /// Builds an association from explicit pilots and serving sets. Serving
    /// sets may be empty; no master AP is recorded.
    pub fn from_sets(
        pilot_of: Vec<usize>,
        serving: Vec<Vec<usize>>,
        num_aps: usize,
        num_pilots: usize,
    ) -> Result<Self> {
        if pilot_of.len() != serving.len() {
            return Err(Error::dimension("association", pilot_of.len(), serving.len()));
        }
        if let Some(&p) = pilot_of.iter().find(|&&p| p >= num_pilots) {
            return Err(Error::config("pilot_of", format!("pilot {p} out of range")));
        }
        let mut served = vec![Vec::new(); num_aps];
        let mut sorted = Vec::with_capacity(serving.len());
        for (k, set) in serving.into_iter().enumerate() {
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            for &l in &set {
                if l >= num_aps {
                    return Err(Error::config("serving", format!("AP {l} out of range")));
                }
                served[l].push(k);
            }
            sorted.push(set);
        }
        let k_count = pilot_of.len();
        Ok(Association {
            pilot_of,
            master_ap: vec![None; k_count],
            serving: sorted,
            served,
            num_pilots,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.pilot_of.len()
    }

    pub fn num_aps(&self) -> usize {
        self.served.len()
    }

    pub fn num_pilots(&self) -> usize {
        self.num_pilots
    }

    pub fn pilot_of(&self, k: usize) -> usize {
        self.pilot_of[k]
    }

    pub fn master_ap(&self, k: usize) -> Option<usize> {
        self.master_ap[k]
    }

    /// `M_k`.
    pub fn serving_aps(&self, k: usize) -> &[usize] {
        &self.serving[k]
    }

    /// `D_l`.
    pub fn served_ues(&self, l: usize) -> &[usize] {
        &self.served[l]
    }

    pub fn serves(&self, k: usize, l: usize) -> bool {
        self.serving[k].binary_search(&l).is_ok()
    }

    /// `P_k`: UEs sharing UE `k`'s pilot, including `k`.
    pub fn copilots(&self, k: usize) -> Vec<usize> {
        self.pilot_users(self.pilot_of[k])
    }

    pub fn pilot_users(&self, t: usize) -> Vec<usize> {
        (0..self.num_ues()).filter(|&i| self.pilot_of[i] == t).collect()
    }

    /// `S_k`: UEs with at least one serving AP in common with `k`.
    pub fn overlapping_ues(&self, k: usize) -> Vec<usize> {
        (0..self.num_ues())
            .filter(|&i| {
                self.serving[i]
                    .iter()
                    .any(|l| self.serving[k].binary_search(l).is_ok())
            })
            .collect()
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for k in 0..self.num_ues() {
            if self.serving[k].is_empty() {
                return Err(format!("UE {k} has no serving AP"));
            }
            if let Some(m) = self.master_ap[k] {
                if !self.serves(k, m) {
                    return Err(format!("UE {k} not served by its master AP {m}"));
                }
            }
            for &l in &self.serving[k] {
                if !self.served[l].contains(&k) {
                    return Err(format!("UE {k} lists AP {l} but AP {l} does not list UE {k}"));
                }
            }
        }
        for (l, ues) in self.served.iter().enumerate() {
            for &k in ues {
                if !self.serves(k, l) {
                    return Err(format!("AP {l} lists UE {k} but not vice versa"));
                }
            }
            for t in 0..self.num_pilots {
                let non_master = ues
                    .iter()
                    .filter(|&&k| self.pilot_of[k] == t && self.master_ap[k] != Some(l))
                    .count();
                if non_master > 1 {
                    return Err(format!("AP {l} serves {non_master} non-master UEs on pilot {t}"));
                }
            }
        }
        Ok(())
    }
}

/// Applies `D_k = diag(D_k1, …, D_kL)` to a stacked vector of `L` blocks.
pub fn selector_apply(assoc: &Association, k: usize, x: &CVector, block_len: usize) -> Result<CVector> {
    let expected = assoc.num_aps() * block_len;
    if x.len() != expected {
        return Err(Error::dimension("selector_apply", expected, x.len()));
    }
    let mut out = CVector::zeros(expected);
    for &l in assoc.serving_aps(k) {
        out.rows_mut(l * block_len, block_len)
            .copy_from(&x.rows(l * block_len, block_len));
    }
    Ok(out)
}
