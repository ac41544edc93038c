//! Shared fixtures for the integration suites.
#![allow(dead_code)] // each test binary uses its own subset

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gvtree::mrio::{
    self, contribution_matrix, leontief_inverse, technical_coefficients, value_added_shares,
    MrioTable, SectorId,
};
use gvtree::network::{build_network, ValueNetwork};

/// Two economies, two industries; both accounting identities close exactly.
pub fn two_economy_table() -> MrioTable {
    let countries = ["AAA", "AAB"];
    let industries = [("c1", "I01"), ("c2", "I02")];
    let mut sectors = Vec::new();
    for (ci, c) in countries.iter().enumerate() {
        for (ii, (wiod, code)) in industries.iter().enumerate() {
            sectors.push(SectorId {
                country: (*c).to_string(),
                industry: (*code).to_string(),
                wiod_code: (*wiod).to_string(),
                index: ci * industries.len() + ii,
            });
        }
    }
    MrioTable {
        transactions: DMatrix::from_row_slice(
            4,
            4,
            &[
                25.0, 10.0, 20.0, 10.0, //
                10.0, 5.0, 10.0, 20.0, //
                30.0, 15.0, 600.0, 500.0, //
                35.0, 30.0, 1000.0, 1000.0,
            ],
        ),
        final_demand: DMatrix::from_row_slice(
            4,
            2,
            &[
                45.0, 10.0, //
                50.0, 5.0, //
                5.0, 8650.0, //
                25.0, 7910.0,
            ],
        ),
        value_added: DVector::from_vec(vec![20.0, 40.0, 8170.0, 8470.0]),
        total_output: DVector::from_vec(vec![120.0, 100.0, 9800.0, 10000.0]),
        sectors,
        year: 0,
    }
}

/// Full matrix pipeline: table -> contribution matrix -> network.
pub fn pipeline_network(table: &MrioTable) -> ValueNetwork {
    let coeff = technical_coefficients(table).expect("productive table");
    let leontief = leontief_inverse(&coeff).expect("invertible");
    let shares = value_added_shares(table).expect("valid table");
    let g = contribution_matrix(&shares, &leontief).expect("aligned");
    build_network(&g, &table.sectors, table.year, &BTreeSet::new()).expect("aligned")
}

/// Random direct-weight network for extraction oracles: off-diagonal
/// entries are present with probability `density` and drawn around `alpha`,
/// deliberately including weights exactly at the threshold.
pub fn random_net(seed: u64, n: usize, density: f64, alpha: f64) -> ValueNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j || rng.random::<f64>() >= density {
                continue;
            }
            weights[(i, j)] = match rng.random_range(0..8u32) {
                0 => alpha,
                1 => alpha * 0.5,
                _ => alpha * rng.random_range(1.0..8.0),
            };
        }
    }
    let nodes = (0..n)
        .map(|i| SectorId {
            country: format!(
                "C{}{}",
                (b'A' + (i / 26) as u8) as char,
                (b'A' + (i % 26) as u8) as char
            ),
            industry: "IAA".to_string(),
            wiod_code: format!("c{}", i + 1),
            index: i,
        })
        .collect();
    ValueNetwork {
        nodes,
        weights,
        year: 0,
    }
}

/// Random network with continuous weights (no exact ties), for properties
/// that hold only up to tie-breaking.
pub fn random_net_continuous(seed: u64, n: usize, density: f64) -> ValueNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = random_net(seed, n, 0.0, 0.01);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < density {
                net.weights[(i, j)] = rng.random_range(1e-4..0.4);
            }
        }
    }
    net
}

/// Synthetic table with within-country dense blocks plus a weak directed
/// ring of cross-country bridges, so the derived network's weights span
/// orders of magnitude like real data: nearby pairs get direct edges,
/// distant pairs only multi-hop routes. `bridge` is the coefficient weight
/// of each cross-country link.
pub fn bridged_table(
    n_countries: usize,
    n_industries: usize,
    domestic_mass: f64,
    bridge: f64,
    seed: u64,
) -> MrioTable {
    assert!(n_countries >= 2);
    assert!(domestic_mass + bridge < 1.0);
    let n = n_countries * n_industries;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut coeff = DMatrix::zeros(n, n);
    for j in 0..n {
        let country = j / n_industries;
        let block = country * n_industries..(country + 1) * n_industries;
        let draws: Vec<f64> = block.clone().map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = draws.iter().sum();
        for (offset, i) in block.enumerate() {
            coeff[(i, j)] = domestic_mass * draws[offset] / total;
        }
        // Each sector also buys from the same industry one country upstream.
        let upstream = (country + n_countries - 1) % n_countries;
        let i = upstream * n_industries + j % n_industries;
        coeff[(i, j)] += bridge;
    }

    let demand_seed = DVector::from_fn(n, |_, _| rng.random_range(100.0..1000.0));
    let mut i_minus_a = -&coeff;
    for i in 0..n {
        i_minus_a[(i, i)] += 1.0;
    }
    let x = i_minus_a.lu().solve(&demand_seed).expect("productive");

    let mut transactions = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            transactions[(i, j)] = coeff[(i, j)] * x[j];
        }
    }
    let mut final_demand = DMatrix::zeros(n, 1);
    let mut value_added = DVector::zeros(n);
    for i in 0..n {
        let row: f64 = (0..n).map(|j| transactions[(i, j)]).sum();
        final_demand[(i, 0)] = x[i] - row;
    }
    for j in 0..n {
        let col: f64 = (0..n).map(|i| transactions[(i, j)]).sum();
        value_added[j] = x[j] - col;
    }

    let mut sectors = Vec::with_capacity(n);
    for c in 0..n_countries {
        for k in 0..n_industries {
            sectors.push(SectorId {
                country: format!(
                    "C{}{}",
                    (b'A' + (c / 26) as u8) as char,
                    (b'A' + (c % 26) as u8) as char
                ),
                industry: format!(
                    "I{}{}",
                    (b'A' + (k / 26) as u8) as char,
                    (b'A' + (k % 26) as u8) as char
                ),
                wiod_code: format!("c{}", k + 1),
                index: sectors.len(),
            });
        }
    }
    let table = MrioTable {
        transactions,
        final_demand,
        value_added,
        total_output: x,
        sectors,
        year: 0,
    };
    debug_assert!(mrio::validate_accounting(&table, 1e-9).unwrap().passed());
    table
}
