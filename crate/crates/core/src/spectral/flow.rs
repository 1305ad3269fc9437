//! Continuous labelling of the eigenvalues `λ_j(g)` along a `g` path.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{classify_real_with, eigenvalues_only, TAU_RE};
use crate::error::{Error, Result};
use crate::model::{build_matrix, PotentialVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub initial_step: f64,
    /// Below this step a failing step is an error.
    pub min_step: f64,
    /// At or below this step, two labels that meet (and split again, or
    /// turn into a conjugate pair) are allowed through.
    pub collision_step: f64,
    pub tau: f64,
}

impl FlowOptions {
    pub fn new(initial_step: f64) -> Self {
        FlowOptions { initial_step, min_step: 1e-9, collision_step: 1e-6, tau: TAU_RE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub g: f64,
    /// Indexed by label.
    pub eigenvalues: Vec<Complex64>,
    pub real: Vec<bool>,
    /// Distance moved by each label since the previous step.
    pub moves: Vec<f64>,
    /// Half the distance from each label's previous position to the
    /// nearest distinct eigenvalue.
    pub half_separation: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub g: f64,
    pub labels: (usize, usize),
    pub real_before: bool,
    pub real_after: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    /// `λ_j(0)`, descending; label `j` is the index.
    pub initial: Vec<f64>,
    pub steps: Vec<FlowStep>,
    pub collisions: Vec<CollisionEvent>,
    pub options: FlowOptions,
}

impl SpectralFlow {
    pub fn g_grid(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.g).collect()
    }

    pub fn trajectory(&self, j: usize) -> Vec<(f64, Complex64)> {
        self.steps.iter().map(|s| (s.g, s.eigenvalues[j])).collect()
    }

    /// Every accepted step moved each label less than half its separation,
    /// apart from labels in a recorded collision at that `g`.
    pub fn continuity_holds(&self) -> bool {
        self.steps.iter().all(|s| {
            (0..self.n).all(|j| {
                s.moves[j] < s.half_separation[j]
                    || self.collisions.iter().any(|c| c.g == s.g && (c.labels.0 == j + 1 || c.labels.1 == j + 1))
            })
        })
    }

    /// Columns `j,g,re,im,is_real` (labels 1-based).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,g,re,im,is_real\n");
        for j in 0..self.n {
            for st in &self.steps {
                let z = st.eigenvalues[j];
                let _ = writeln!(s, "{},{:e},{:e},{:e},{}", j + 1, st.g, z.re, z.im, u8::from(st.real[j]));
            }
        }
        s
    }
}

/// Minimum-cost perfect matching (rows to columns) for a square cost matrix.
pub(crate) fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Label → index into `new`: nearest neighbour, or optimal assignment when
/// two labels want the same eigenvalue.
fn match_labels(old: &[Complex64], new: &[Complex64]) -> Vec<usize> {
    let nearest: Vec<usize> = old
        .iter()
        .map(|z| (0..new.len()).min_by(|&a, &b| (new[a] - z).norm().total_cmp(&(new[b] - z).norm())).unwrap_or(0))
        .collect();
    let mut seen = vec![false; new.len()];
    if nearest.iter().all(|&j| !std::mem::replace(&mut seen[j], true)) {
        return nearest;
    }
    let cost: Vec<Vec<f64>> = old.iter().map(|z| new.iter().map(|w| (w - z).norm()).collect()).collect();
    hungarian(&cost)
}

fn half_separations(cur: &[Complex64]) -> Vec<f64> {
    cur.iter()
        .enumerate()
        .map(|(i, z)| {
            let tie = 1e-10 * (1.0 + z.norm());
            let d = cur
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, w)| (w - z).norm())
                .filter(|&d| d > tie)
                .fold(f64::INFINITY, f64::min);
            0.5 * d
        })
        .collect()
}

/// Checks that every violating label belongs to an isolated pair that met:
/// both members stay near the pair's old midpoint, far from everyone else.
fn pair_events(cur: &[Complex64], next: &[Complex64], violators: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &a in violators {
        if pairs.iter().any(|&(x, y)| x == a || y == a) {
            continue;
        }
        let b = (0..cur.len()).filter(|&j| j != a).min_by(|&x, &y| (cur[x] - cur[a]).norm().total_cmp(&(cur[y] - cur[a]).norm()))?;
        if pairs.iter().any(|&(x, y)| x == b || y == b) {
            return None;
        }
        let mid = 0.5 * (cur[a] + cur[b]);
        let others = (0..cur.len())
            .filter(|&j| j != a && j != b)
            .map(|j| (cur[j] - mid).norm())
            .fold(f64::INFINITY, f64::min);
        let reach = (next[a] - mid).norm().max((next[b] - mid).norm());
        if reach >= 0.5 * others {
            return None;
        }
        pairs.push((a.min(b), a.max(b)));
    }
    Some(pairs)
}

/// Flow with default options.
pub fn track_flow(potential: &PotentialVector, g_max: f64, initial_step: f64) -> Result<SpectralFlow> {
    track_flow_with(potential, g_max, FlowOptions::new(initial_step))
}

pub fn track_flow_with(potential: &PotentialVector, g_max: f64, options: FlowOptions) -> Result<SpectralFlow> {
    if !(g_max > 0.0) || !(options.initial_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "flow needs g_max > 0 and a positive step, got {g_max} and {}",
            options.initial_step
        )));
    }
    let n = potential.len();
    let start = eigenvalues_only(&build_matrix(potential, 0.0)?)?;
    let mut initial: Vec<f64> = start.eigenvalues.iter().map(|z| z.re).collect();
    initial.sort_by(|a, b| b.total_cmp(a));
    let mut cur: Vec<Complex64> = initial.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut steps = vec![FlowStep {
        g: 0.0,
        eigenvalues: cur.clone(),
        real: vec![true; n],
        moves: vec![0.0; n],
        half_separation: half_separations(&cur),
    }];
    let mut collisions = Vec::new();
    let mut cur_real = vec![true; n];
    let mut g = 0.0;
    let mut h = options.initial_step;
    while g < g_max {
        let g_new = (g + h).min(g_max);
        let spec = eigenvalues_only(&build_matrix(potential, g_new)?)?;
        let assign = match_labels(&cur, &spec.eigenvalues);
        let next: Vec<Complex64> = assign.iter().map(|&k| spec.eigenvalues[k]).collect();
        let moves: Vec<f64> = cur.iter().zip(&next).map(|(a, b)| (b - a).norm()).collect();
        let half = half_separations(&cur);
        let violators: Vec<usize> = (0..n).filter(|&j| moves[j] >= half[j]).collect();
        let mut events = Vec::new();
        if !violators.is_empty() {
            let pairs = if h <= options.collision_step { pair_events(&cur, &next, &violators) } else { None };
            match pairs {
                Some(p) => events = p,
                None => {
                    h *= 0.5;
                    if h < options.min_step {
                        let a = violators[0];
                        let b = violators.get(1).copied().unwrap_or(a);
                        return Err(Error::StepUnderflow { g, a: a + 1, b: b + 1 });
                    }
                    continue;
                }
            }
        }
        let class = classify_real_with(&next, options.tau)?;
        let real = class.real_mask(n);
        for (a, b) in events {
            collisions.push(CollisionEvent {
                g: g_new,
                labels: (a + 1, b + 1),
                real_before: cur_real[a] && cur_real[b],
                real_after: real[a] && real[b],
            });
        }
        steps.push(FlowStep { g: g_new, eigenvalues: next.clone(), real: real.clone(), moves, half_separation: half });
        cur = next;
        cur_real = real;
        g = g_new;
        h = (2.0 * h).min(options.initial_step);
    }
    Ok(SpectralFlow { n, seed: potential.seed, stream: potential.stream, initial, steps, collisions, options })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_potential, PotentialSpec};

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn free_flow_follows_ellipses() {
        let v = PotentialVector::from_values(vec![0.0; 8]);
        let flow = track_flow(&v, 0.5, 0.05).unwrap();
        assert_eq!(flow.steps[0].g, 0.0);
        assert!(flow.continuity_holds());
        for st in &flow.steps {
            for z in &st.eigenvalues {
                let (a, b) = (2.0 * st.g.cosh(), 2.0 * st.g.sinh());
                let on = if b > 0.0 { (z.re / a).powi(2) + (z.im / b).powi(2) - 1.0 } else { z.im };
                assert!(on.abs() < 1e-9, "g={} z={z}", st.g);
            }
        }
        // label 1 is the top of the band and stays at 2cosh g
        let last = flow.steps.last().unwrap();
        assert!((last.eigenvalues[0].re - 2.0 * last.g.cosh()).abs() < 1e-9);
    }

    #[test]
    fn random_flow_is_continuous() {
        let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), 30, 4).unwrap();
        let flow = track_flow(&v, 1.0, 0.02).unwrap();
        assert!(flow.continuity_holds());
        let mut sorted = flow.initial.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(sorted, flow.initial);
        assert!(flow.to_csv().starts_with("j,g,re,im,is_real\n"));
    }
}
