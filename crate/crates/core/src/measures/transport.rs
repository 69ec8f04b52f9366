//! Exact bounded-Lipschitz distance between finitely supported measures.
//!
//! `d_BL(μ, ν) = sup { ∫ f d(μ - ν) : |f| ≤ 1, Lip(f) ≤ 1 }`. Since μ and ν
//! have equal mass, shifting `f` by a constant changes nothing, so the
//! constraint set can be replaced by "1-Lipschitz for the truncated metric
//! `min(d, 2)`". By Kantorovich–Rubinstein duality the value is then the
//! optimal transport cost between μ and ν under `min(d, 2)`, which is solved
//! here exactly by successive shortest paths with node potentials.

const MASS_EPS: f64 = 1e-15;

/// Minimal cost of moving `supply` onto `demand` (equal totals) with the
/// row-major `cost` matrix.
pub(crate) fn transport_cost(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let n = supply.len();
    let m = demand.len();
    debug_assert_eq!(cost.len(), n * m);
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut flow = vec![0.0; n * m];
    let mut pot_l = vec![0.0; n];
    let mut pot_r: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| cost[i * m + j]).fold(f64::INFINITY, f64::min))
        .collect();

    let mut dist_l = vec![0.0; n];
    let mut dist_r = vec![0.0; m];
    let mut done_l = vec![false; n];
    let mut done_r = vec![false; m];
    let mut prev_r = vec![usize::MAX; m];
    let mut prev_l: Vec<Option<usize>> = vec![None; n];

    loop {
        if !supply.iter().any(|&s| s > MASS_EPS) || !demand.iter().any(|&d| d > MASS_EPS) {
            break;
        }
        for i in 0..n {
            dist_l[i] = if supply[i] > MASS_EPS { 0.0 } else { f64::INFINITY };
            done_l[i] = false;
            prev_l[i] = None;
        }
        dist_r.fill(f64::INFINITY);
        done_r.fill(false);
        let mut target = None;
        loop {
            let mut best = f64::INFINITY;
            let mut pick = None;
            for i in 0..n {
                if !done_l[i] && dist_l[i] < best {
                    best = dist_l[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_r[j] && dist_r[j] < best {
                    best = dist_r[j];
                    pick = Some((false, j));
                }
            }
            let Some((left, k)) = pick else { break };
            if left {
                let i = k;
                done_l[i] = true;
                let row = &cost[i * m..(i + 1) * m];
                for j in 0..m {
                    if done_r[j] {
                        continue;
                    }
                    let rc = (row[j] + pot_l[i] - pot_r[j]).max(0.0);
                    let nd = dist_l[i] + rc;
                    if nd < dist_r[j] {
                        dist_r[j] = nd;
                        prev_r[j] = i;
                    }
                }
            } else {
                let j = k;
                done_r[j] = true;
                if demand[j] > MASS_EPS {
                    target = Some(j);
                    break;
                }
                for i in 0..n {
                    if done_l[i] || flow[i * m + j] <= MASS_EPS {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + pot_r[j] - pot_l[i]).max(0.0);
                    let nd = dist_r[j] + rc;
                    if nd < dist_l[i] {
                        dist_l[i] = nd;
                        prev_l[i] = Some(j);
                    }
                }
            }
        }
        let Some(t) = target else { break };
        let reach = dist_r[t];
        for i in 0..n {
            pot_l[i] += dist_l[i].min(reach);
        }
        for j in 0..m {
            pot_r[j] += dist_r[j].min(reach);
        }

        // walk back to the source, collecting forward and backward arcs
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        let mut j = t;
        let source = loop {
            let i = prev_r[j];
            forward.push(i * m + j);
            match prev_l[i] {
                None => break i,
                Some(j2) => {
                    backward.push(i * m + j2);
                    j = j2;
                }
            }
        };
        let mut amount = supply[source].min(demand[t]);
        for &e in &backward {
            amount = amount.min(flow[e]);
        }
        for &e in &forward {
            flow[e] += amount;
        }
        for &e in &backward {
            flow[e] -= amount;
            if flow[e] < MASS_EPS {
                flow[e] = 0.0;
            }
        }
        supply[source] -= amount;
        demand[t] -= amount;
    }
    flow.iter().zip(cost).map(|(f, c)| f * c).sum()
}
