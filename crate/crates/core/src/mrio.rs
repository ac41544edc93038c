//! Multi-regional input-output tables and the matrix pipeline that turns
//! them into a value-added contribution matrix.
//!
//! The pipeline is: transactions `Z` and total output `x` give the technical
//! coefficients `A = Z * diag(x)^-1`; a productive economy (spectral radius
//! of `A` below one) has a Leontief inverse `L = (I - A)^-1`; scaling the
//! rows of `L` by the value-added shares `u = v / x` gives the contribution
//! matrix `G`, whose entry `(i, j)` is sector `i`'s share of the value added
//! embodied in sector `j`'s final demand. Columns of `G` over sectors with
//! positive output sum to one.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative tolerance for the accounting identities. Real-world
/// tables carry rounding residuals; synthetic and golden tables are checked
/// at a much tighter 1e-9.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Max-norm bound required of the Leontief inverse residual `L(I-A) - I`.
pub const LEONTIEF_RESIDUAL_TOL: f64 = 1e-9;

/// One sector of one country, at a dense position in the table.
///
/// Ordering over a table is country-major, industry-minor; `index` is the
/// position in that ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SectorId {
    /// 3-letter country code, e.g. "USA".
    pub country: String,
    /// 3-letter industry code, e.g. "Agr".
    pub industry: String,
    /// WIOD-style industry code, e.g. "c1".
    pub wiod_code: String,
    /// Dense 0-based position in the table.
    pub index: usize,
}

impl SectorId {
    /// Display label in `COUNTRY_<number>` form, e.g. "USA_1" for c1.
    pub fn label(&self) -> String {
        let num = self.wiod_code.strip_prefix('c').unwrap_or(&self.wiod_code);
        format!("{}_{}", self.country, num)
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Look a sector up by label. Accepts `USA_1` (WIOD code number),
/// `USA_Agr` and `USA-Agr` (3-letter industry code) forms.
pub fn find_sector<'a>(sectors: &'a [SectorId], query: &str) -> Option<&'a SectorId> {
    let (country, industry) = query.split_once(['_', '-'])?;
    sectors.iter().find(|s| {
        s.country == country
            && (s.industry == industry
                || s.wiod_code == industry
                || s.wiod_code.strip_prefix('c') == Some(industry))
    })
}

/// A multi-regional input-output table for one year.
///
/// Rows of `transactions` record what a sector sells to every other sector;
/// columns record what it buys. `final_demand` has one column per demand
/// category, `value_added` and `total_output` close the column and row
/// identities.
#[derive(Debug, Clone, PartialEq)]
pub struct MrioTable {
    /// Inter-industry transactions Z, n x n.
    pub transactions: DMatrix<f64>,
    /// Final demand F, n x m with m >= 1 demand categories.
    pub final_demand: DMatrix<f64>,
    /// Value added v, length n. May contain negative entries in real data.
    pub value_added: DVector<f64>,
    /// Total output x, length n.
    pub total_output: DVector<f64>,
    pub sectors: Vec<SectorId>,
    pub year: i32,
}

impl MrioTable {
    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    pub fn find_sector(&self, query: &str) -> Option<&SectorId> {
        find_sector(&self.sectors, query)
    }
}

/// Which of the two accounting identities a residual belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    /// Row identity: sum_j Z_ij + sum_k F_ik = x_i.
    Row,
    /// Column identity: sum_i Z_ij + v_j = x_j.
    Column,
}

impl fmt::Display for IdentityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityKind::Row => write!(f, "row"),
            IdentityKind::Column => write!(f, "column"),
        }
    }
}

/// A single identity residual beyond tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityFailure {
    pub kind: IdentityKind,
    pub index: usize,
    pub residual: f64,
}

impl fmt::Display for IdentityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: residual {:.6e}",
            self.kind, self.index, self.residual
        )
    }
}

/// Outcome of checking the row and column accounting identities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tolerance: f64,
    /// Relative residual of the row identity, per row.
    pub row_residuals: Vec<f64>,
    /// Relative residual of the column identity, per column.
    pub column_residuals: Vec<f64>,
    /// Residuals beyond tolerance, rows first then columns.
    pub failures: Vec<IdentityFailure>,
    /// Sectors with negative value added; accepted, but worth a warning.
    pub negative_value_added: Vec<usize>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check table dimensions and the row/column accounting identities.
///
/// Residuals are relative: `|lhs - rhs| / max(1, |x|)`. Dimension and
/// non-finite/negativity problems are structural errors; identity residuals
/// beyond `tol` are reported, not raised.
pub fn validate_accounting(table: &MrioTable, tol: f64) -> Result<ValidationReport> {
    let n = table.sectors.len();
    check_dims(table, n)?;
    check_entries(table)?;

    let mut report = ValidationReport {
        tolerance: tol,
        row_residuals: Vec::with_capacity(n),
        column_residuals: Vec::with_capacity(n),
        failures: Vec::new(),
        negative_value_added: Vec::new(),
    };

    for i in 0..n {
        let mut lhs = 0.0;
        for j in 0..n {
            lhs += table.transactions[(i, j)];
        }
        for k in 0..table.final_demand.ncols() {
            lhs += table.final_demand[(i, k)];
        }
        let x = table.total_output[i];
        let residual = (lhs - x).abs() / x.abs().max(1.0);
        report.row_residuals.push(residual);
        if residual > tol {
            report.failures.push(IdentityFailure {
                kind: IdentityKind::Row,
                index: i,
                residual,
            });
        }
    }

    for j in 0..n {
        let mut lhs = table.value_added[j];
        for i in 0..n {
            lhs += table.transactions[(i, j)];
        }
        let x = table.total_output[j];
        let residual = (lhs - x).abs() / x.abs().max(1.0);
        report.column_residuals.push(residual);
        if residual > tol {
            report.failures.push(IdentityFailure {
                kind: IdentityKind::Column,
                index: j,
                residual,
            });
        }
        if table.value_added[j] < 0.0 {
            report.negative_value_added.push(j);
        }
    }

    if !report.negative_value_added.is_empty() {
        log::warn!(
            "table year {} has {} sector(s) with negative value added",
            table.year,
            report.negative_value_added.len()
        );
    }
    Ok(report)
}

fn check_dims(table: &MrioTable, n: usize) -> Result<()> {
    let dim_err = |context: &str, expected: String, found: String| Error::Dimension {
        context: context.to_string(),
        expected,
        found,
    };
    if table.transactions.nrows() != n || table.transactions.ncols() != n {
        return Err(dim_err(
            "transactions matrix",
            format!("{n}x{n}"),
            format!(
                "{}x{}",
                table.transactions.nrows(),
                table.transactions.ncols()
            ),
        ));
    }
    if table.final_demand.nrows() != n || table.final_demand.ncols() == 0 {
        return Err(dim_err(
            "final demand matrix",
            format!("{n}x(>=1)"),
            format!(
                "{}x{}",
                table.final_demand.nrows(),
                table.final_demand.ncols()
            ),
        ));
    }
    if table.value_added.len() != n {
        return Err(dim_err(
            "value added vector",
            n.to_string(),
            table.value_added.len().to_string(),
        ));
    }
    if table.total_output.len() != n {
        return Err(dim_err(
            "total output vector",
            n.to_string(),
            table.total_output.len().to_string(),
        ));
    }
    Ok(())
}

fn check_entries(table: &MrioTable) -> Result<()> {
    let bad = |location: String, message: &str| Error::InvalidValue {
        location,
        message: message.to_string(),
    };
    for (idx, &z) in table.transactions.iter().enumerate() {
        if !z.is_finite() || z < 0.0 {
            let (i, j) = (
                idx % table.transactions.nrows(),
                idx / table.transactions.nrows(),
            );
            return Err(bad(
                format!("Z[{i},{j}]"),
                "must be finite and non-negative",
            ));
        }
    }
    for (idx, &f) in table.final_demand.iter().enumerate() {
        if !f.is_finite() || f < 0.0 {
            let (i, k) = (
                idx % table.final_demand.nrows(),
                idx / table.final_demand.nrows(),
            );
            return Err(bad(
                format!("F[{i},{k}]"),
                "must be finite and non-negative",
            ));
        }
    }
    for (j, &v) in table.value_added.iter().enumerate() {
        if !v.is_finite() {
            return Err(bad(format!("v[{j}]"), "must be finite"));
        }
    }
    for (i, &x) in table.total_output.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(bad(format!("x[{i}]"), "must be finite and non-negative"));
        }
    }
    Ok(())
}

/// Technical coefficients A, column j divided by total output x_j.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientsMatrix {
    pub matrix: DMatrix<f64>,
    /// Columns with zero total output; their A columns are zero and the
    /// sectors are excluded from trees and measures downstream.
    pub zero_output_columns: Vec<usize>,
    /// Estimated spectral radius of A.
    pub spectral_radius: f64,
}

/// Divide each transactions column by its total output and verify that the
/// economy is productive (spectral radius of A strictly below one).
pub fn technical_coefficients(table: &MrioTable) -> Result<CoefficientsMatrix> {
    let n = table.sector_count();
    check_dims(table, n)?;
    let mut a = DMatrix::zeros(n, n);
    let mut zero_output_columns = Vec::new();
    for j in 0..n {
        let x = table.total_output[j];
        if x > 0.0 {
            for i in 0..n {
                a[(i, j)] = table.transactions[(i, j)] / x;
            }
        } else {
            zero_output_columns.push(j);
        }
    }
    let spectral_radius = estimate_spectral_radius(&a);
    if spectral_radius >= 1.0 {
        return Err(Error::NonProductive { spectral_radius });
    }
    Ok(CoefficientsMatrix {
        matrix: a,
        zero_output_columns,
        spectral_radius,
    })
}

/// Estimate the spectral radius of a non-negative matrix.
///
/// If every column sum is below one the Perron bound `rho <= max column sum`
/// already settles productiveness, and a short power iteration refines the
/// value. Otherwise (negative value added can push a column sum above one
/// while rho stays below it) the estimate is the geometric mean growth rate
/// of the renormalized power iteration, which converges for any non-negative
/// matrix from a positive start.
pub fn estimate_spectral_radius(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let col_bound = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)]).sum::<f64>())
        .fold(0.0f64, f64::max);
    if col_bound == 0.0 {
        return 0.0;
    }
    let iterations: u32 = if col_bound < 1.0 { 80 } else { 400 };
    let burn_in = iterations / 2;
    let mut x = DVector::from_element(n, 1.0);
    let mut log_growth = 0.0;
    let mut steps = 0u32;
    for it in 0..iterations {
        let y = a * &x;
        let norm = y.amax();
        if norm == 0.0 {
            // A annihilates a positive vector; with A >= 0 that means A = 0.
            return 0.0;
        }
        // The growth rate is averaged past the burn-in, where the transient
        // from the start vector is gone.
        if it >= burn_in {
            log_growth += norm.ln();
            steps += 1;
        }
        x = y / norm;
    }
    let estimate = (log_growth / f64::from(steps)).exp();
    estimate.min(col_bound)
}

/// The Leontief inverse L = (I - A)^-1.
#[derive(Debug, Clone, PartialEq)]
pub struct LeontiefInverse {
    pub matrix: DMatrix<f64>,
}

/// Invert I - A by dense LU factorization and verify the residual
/// `max |L(I-A) - I| <= 1e-9`.
pub fn leontief_inverse(coeff: &CoefficientsMatrix) -> Result<LeontiefInverse> {
    let a = &coeff.matrix;
    let n = a.nrows();
    let mut i_minus_a = -a.clone();
    for i in 0..n {
        i_minus_a[(i, i)] += 1.0;
    }
    let lu = i_minus_a.clone().lu();
    let mut l = lu.try_inverse().ok_or(Error::Singular {
        condition: f64::INFINITY,
        residual: f64::INFINITY,
    })?;

    let residual = (&l * &i_minus_a - DMatrix::<f64>::identity(n, n)).amax();
    if !residual.is_finite() || residual > LEONTIEF_RESIDUAL_TOL {
        let condition = one_norm(&i_minus_a) * one_norm(&l);
        return Err(Error::Singular {
            condition,
            residual,
        });
    }

    // L is a sum of non-negative matrix powers with unit diagonal leading
    // term; negatives or sub-unit diagonals can only be factorization
    // round-off. Anything beyond noise level is a failure.
    let mut worst = 0.0f64;
    for e in l.iter_mut() {
        if *e < 0.0 {
            worst = worst.min(*e);
            *e = 0.0;
        }
    }
    for i in 0..n {
        worst = worst.min(l[(i, i)] - 1.0);
    }
    if worst < -LEONTIEF_RESIDUAL_TOL {
        let condition = one_norm(&i_minus_a) * one_norm(&l);
        return Err(Error::Singular {
            condition,
            residual: -worst,
        });
    }
    Ok(LeontiefInverse { matrix: l })
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

/// Value-added shares u = v / x, with zero-output sectors flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueShareVector {
    pub shares: DVector<f64>,
    /// Sectors with zero total output; their share is defined as zero.
    pub zero_output: Vec<usize>,
}

pub fn value_added_shares(table: &MrioTable) -> Result<ValueShareVector> {
    let n = table.sector_count();
    check_dims(table, n)?;
    let mut shares = DVector::zeros(n);
    let mut zero_output = Vec::new();
    for j in 0..n {
        let x = table.total_output[j];
        if x > 0.0 {
            shares[j] = table.value_added[j] / x;
        } else {
            zero_output.push(j);
        }
    }
    Ok(ValueShareVector {
        shares,
        zero_output,
    })
}

/// Value-added contribution matrix G, rows of L scaled by the shares.
///
/// For a validated productive table every column over sectors with positive
/// output sums to one, since the share vector is exactly the column
/// remainder of A.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionMatrix {
    pub matrix: DMatrix<f64>,
}

pub fn contribution_matrix(
    u: &ValueShareVector,
    l: &LeontiefInverse,
) -> Result<ContributionMatrix> {
    let n = l.matrix.nrows();
    if u.shares.len() != n {
        return Err(Error::Dimension {
            context: "contribution matrix".to_string(),
            expected: format!("share vector of length {n}"),
            found: u.shares.len().to_string(),
        });
    }
    let mut g = l.matrix.clone();
    for i in 0..n {
        let share = u.shares[i];
        for j in 0..n {
            g[(i, j)] *= share;
        }
    }
    Ok(ContributionMatrix { matrix: g })
}

/// Aggregate final demand f, the row sums of F.
pub fn aggregate_final_demand(table: &MrioTable) -> Result<DVector<f64>> {
    let n = table.sector_count();
    check_dims(table, n)?;
    let mut f = DVector::zeros(n);
    for i in 0..n {
        for k in 0..table.final_demand.ncols() {
            f[i] += table.final_demand[(i, k)];
        }
    }
    Ok(f)
}
