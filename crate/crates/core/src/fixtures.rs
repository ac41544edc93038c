//! Shared unit-test fixtures.

use nalgebra::{DMatrix, DVector};

use crate::mrio::{MrioTable, SectorId};
use crate::network::ValueNetwork;

/// Small hand-built network: one node per entry of `countries`, weights
/// given row-major with `weights[i * n + j]` the edge i -> j.
pub(crate) fn net_from_weights(countries: &[&str], weights: &[f64]) -> ValueNetwork {
    let n = countries.len();
    assert_eq!(weights.len(), n * n);
    let nodes = countries
        .iter()
        .enumerate()
        .map(|(i, c)| SectorId {
            country: (*c).to_string(),
            industry: "IAA".to_string(),
            wiod_code: format!("c{}", i + 1),
            index: i,
        })
        .collect();
    ValueNetwork {
        nodes,
        weights: DMatrix::from_row_slice(n, n, weights),
        year: 0,
    }
}

/// Two economies, two industries each; closes both accounting identities
/// exactly in integers.
pub(crate) fn two_economy_table() -> MrioTable {
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
