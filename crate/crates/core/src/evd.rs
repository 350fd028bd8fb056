//! Two-sided CORDIC eigendecomposition of a Hermitian fixed-point matrix.
//!
//! Each round-robin ordering (see [`crate::ordering`]) partitions the rows
//! into pairs; every pair's 2×2 diagonal block is annihilated by a unitary
//! `J = G·Q` built from two CORDIC direction sequences:
//!
//! * `Q = diag(1, e^{iθ})` with `θ = arg(P[i][j])` — recorded by *vectoring*
//!   the off-diagonal entry, which simultaneously produces its magnitude;
//! * `G`, the real Givens rotation through `φ = ½·atan2(|P[i][j]|·2, P[i][i] −
//!   P[j][j])` — recorded by vectoring the half-difference against the
//!   magnitude (yielding `2φ`) and replaying half that angle.
//!
//! The five pipeline stages apply `P ← J·P·Jᴴ` to every 2×2 submatrix block:
//! phase rotation of block column 2, conjugate phase rotation of block row 2,
//! the `2φ` vectoring (diagonal blocks only), then the plane rotation on
//! block columns and block rows. Because a direction sequence replays
//! bit-exactly, the same two sequences steer the diagonal block, all
//! off-diagonal blocks in its row and column, and the eigenvector update —
//! exactly as the recorded-direction hardware does.
//!
//! A block traverses all five stages inside the pipeline's stage registers
//! at the engine's extended internal precision ([`crate::cordic::ExtFix`]);
//! entries are lifted once on read and settled once at the final writeback,
//! so each entry pays a single rounding per pass no matter how many of the
//! four rotations touch it. That is what the datapath's guard bits buy.
//!
//! Rotations are *skipped* (all writes suppressed, bit-exact identity) when
//! both components of the off-diagonal entry are within one least
//! significant bit of zero; once every pair skips, the matrix is frozen and
//! further sweeps are no-ops, which is what makes a generous sweep budget
//! noise-free after convergence.

use crate::cordic::{CordicConfig, DirectionSequence, ExtFix};
use crate::error::{Error, Result};
use crate::fixedpoint::{CFix, FixPoint};
use crate::matrix::CMat;
use crate::ordering::{parallel_orderings, PipelineModel};

/// Off-diagonal components at or below this raw magnitude are treated as
/// converged and their pair rotation is skipped.
pub const SKIP_THRESHOLD_RAW: i64 = 1;

/// Diagnostic bound (in raw LSB units) on the residual left where a
/// structural zero is written; exceeding it indicates the rotation stages
/// are not actually annihilating the pivot.
pub const OFFDIAG_RESIDUAL_BOUND_RAW: i64 = 4;

/// The two direction sequences steering one pair's rotation, plus the skip
/// flag and a tag binding the parameters to the ordering that produced them.
#[derive(Debug, Clone)]
pub struct PairRotation {
    theta: DirectionSequence,
    phi: DirectionSequence,
    skipped: bool,
    tag: u64,
}

impl PairRotation {
    /// Whether this pair's rotation was skipped as converged.
    pub fn skipped(&self) -> bool {
        self.skipped
    }

    /// The phase-stage direction sequence.
    pub fn theta(&self) -> &DirectionSequence {
        &self.theta
    }

    /// The plane-rotation direction sequence.
    pub fn phi(&self) -> &DirectionSequence {
        &self.phi
    }

    fn check_tag(&self, tag: u64) {
        assert_eq!(
            self.tag, tag,
            "stale rotation parameters: computed for ordering {}, applied in {}",
            self.tag, tag
        );
    }
}

/// One complex entry held in the pipeline's stage registers at extended
/// internal precision. An entry is lifted once when a block enters stage 1
/// and settled once at writeback, so multi-stage passes round exactly once.
#[derive(Debug, Clone, Copy)]
struct CExt {
    re: ExtFix,
    im: ExtFix,
}

fn lift_c(cordic: &CordicConfig, z: CFix) -> CExt {
    CExt {
        re: cordic.lift(z.re),
        im: cordic.lift(z.im),
    }
}

fn settle_c(cordic: &CordicConfig, z: CExt) -> CFix {
    CFix::new(cordic.settle(z.re), cordic.settle(z.im))
}

/// Phase stage: multiplies by the phasor the sequence encodes.
fn rotate_complex_ext(cordic: &CordicConfig, z: CExt, dirs: &DirectionSequence) -> CExt {
    let (re, im) = cordic.rotate_ext(z.re, z.im, dirs);
    CExt { re, im }
}

/// `conj(rotate(conj(z)))`: multiplies by the *conjugate* of the phasor the
/// sequence encodes, using the same datapath (left-side phase stage).
fn rotate_complex_conj_ext(cordic: &CordicConfig, z: CExt, dirs: &DirectionSequence) -> CExt {
    let (re, im) = cordic.rotate_ext(z.re, -z.im, dirs);
    CExt { re, im: -im }
}

/// Applies the real plane rotation to two complex entries, real and
/// imaginary planes independently (the rotation matrix is real).
fn rotate_plane_pair_ext(
    cordic: &CordicConfig,
    a: CExt,
    b: CExt,
    dirs: &DirectionSequence,
) -> (CExt, CExt) {
    let (are, bre) = cordic.rotate_ext(a.re, b.re, dirs);
    let (aim, bim) = cordic.rotate_ext(a.im, b.im, dirs);
    (CExt { re: are, im: aim }, CExt { re: bre, im: bim })
}

/// Diagonalizes the pair's own 2×2 block in place and returns the rotation
/// parameters for the rest of the ordering, plus the residual magnitude (raw
/// units) that the structural zero overwrote.
pub fn diagonalize_pair(
    work: &mut CMat,
    i: usize,
    j: usize,
    cordic: &CordicConfig,
    tag: u64,
) -> (PairRotation, i64) {
    assert!(i < j, "pair indices must be ordered");
    let fmt = work.fmt();
    let a = work.get(i, i);
    let b = work.get(i, j);
    let c = work.get(j, j);
    debug_assert_eq!(a.im.raw(), 0, "diagonal entries must be structurally real");
    debug_assert_eq!(c.im.raw(), 0, "diagonal entries must be structurally real");

    if b.re.raw().abs() <= SKIP_THRESHOLD_RAW && b.im.raw().abs() <= SKIP_THRESHOLD_RAW {
        return (
            PairRotation {
                theta: cordic.angle_to_dirs(0.0),
                phi: cordic.angle_to_dirs(0.0),
                skipped: true,
                tag,
            },
            0,
        );
    }

    let a_re = cordic.lift(a.re);
    let c_ext = lift_c(cordic, c);
    let b_ext = lift_c(cordic, b);

    // Stage 1 — phase, block column 2: vectoring records θ and writes the
    // off-diagonal magnitude; the lower diagonal entry picks up e^{-iθ}.
    let (m12, theta) = cordic.vectoring_ext(b_ext.re, b_ext.im);
    let p22_s1 = rotate_complex_ext(cordic, c_ext, &theta);

    // Stage 2 — phase, block row 2: the conjugate phasor undoes the diagonal
    // entry's phase (imaginary part forced to zero: the block is now real
    // symmetric) and replays the magnitude into the mirror entry bit-exactly.
    let p22_re = {
        let r = rotate_complex_conj_ext(cordic, p22_s1, &theta);
        r.re.or_sticky(r.im.saturated())
    };

    // Stage 3 — vectoring the half-difference against the magnitude yields
    // 2φ; half that angle is replayed as the plane rotation. The difference
    // is halved on the datapath so it cannot outgrow the guard headroom.
    let halfdiff = cordic.half_difference(a_re, p22_re);
    let (_, two_phi) = cordic.vectoring_ext(halfdiff, m12);
    let phi = cordic.angle_to_dirs(two_phi.angle() / 2.0);

    // Stage 4 — plane rotation of the block's columns…
    let (t_i, b_i) = cordic.rotate_ext(a_re, m12, &phi);
    let (t_j, b_j) = cordic.rotate_ext(m12, p22_re, &phi);
    // Stage 5 — …and of its rows, settling each entry's single writeback.
    let (l_i, r_i) = cordic.rotate_ext(t_i, t_j, &phi);
    let (l_j, r_j) = cordic.rotate_ext(b_i, b_j, &phi);
    let (l_i, r_i) = (cordic.settle(l_i), cordic.settle(r_i));
    let (l_j, r_j) = (cordic.settle(l_j), cordic.settle(r_j));

    let residual = r_i.raw().abs().max(l_j.raw().abs());
    let zero_i = FixPoint::zero(fmt).with_sticky(r_i.saturated());
    let zero_j = FixPoint::zero(fmt).with_sticky(l_j.saturated());
    work.set(
        i,
        i,
        CFix::new(l_i, FixPoint::zero(fmt).with_sticky(l_i.saturated())),
    );
    work.set(
        j,
        j,
        CFix::new(r_j, FixPoint::zero(fmt).with_sticky(r_j.saturated())),
    );
    work.set(i, j, CFix::new(zero_i, FixPoint::zero(fmt)));
    work.set(j, i, CFix::new(zero_j, FixPoint::zero(fmt)));

    (
        PairRotation {
            theta,
            phi,
            skipped: false,
            tag,
        },
        residual,
    )
}

/// Applies `J_row · S · J_colᴴ` to the 2×2 block at row pair × column pair.
pub fn apply_offdiag_block(
    work: &mut CMat,
    row_pair: (usize, usize),
    col_pair: (usize, usize),
    row_params: &PairRotation,
    col_params: &PairRotation,
    cordic: &CordicConfig,
    tag: u64,
) {
    row_params.check_tag(tag);
    col_params.check_tag(tag);
    if row_params.skipped && col_params.skipped {
        return;
    }
    let (i1, j1) = row_pair;
    let (i2, j2) = col_pair;
    let mut s11 = lift_c(cordic, work.get(i1, i2));
    let mut s12 = lift_c(cordic, work.get(i1, j2));
    let mut s21 = lift_c(cordic, work.get(j1, i2));
    let mut s22 = lift_c(cordic, work.get(j1, j2));

    // Stage 1 — column-pair phase on block column 2.
    if !col_params.skipped {
        s12 = rotate_complex_ext(cordic, s12, &col_params.theta);
        s22 = rotate_complex_ext(cordic, s22, &col_params.theta);
    }
    // Stage 2 — row-pair conjugate phase on block row 2.
    if !row_params.skipped {
        s21 = rotate_complex_conj_ext(cordic, s21, &row_params.theta);
        s22 = rotate_complex_conj_ext(cordic, s22, &row_params.theta);
    }
    // Stage 4 — row-pair plane rotation down the block's columns.
    if !row_params.skipped {
        (s11, s21) = rotate_plane_pair_ext(cordic, s11, s21, &row_params.phi);
        (s12, s22) = rotate_plane_pair_ext(cordic, s12, s22, &row_params.phi);
    }
    // Stage 5 — column-pair plane rotation across the block's rows.
    if !col_params.skipped {
        (s11, s12) = rotate_plane_pair_ext(cordic, s11, s12, &col_params.phi);
        (s21, s22) = rotate_plane_pair_ext(cordic, s21, s22, &col_params.phi);
    }

    work.set(i1, i2, settle_c(cordic, s11));
    work.set(i1, j2, settle_c(cordic, s12));
    work.set(j1, i2, settle_c(cordic, s21));
    work.set(j1, j2, settle_c(cordic, s22));
}

/// Accumulates the pair's rotation into the eigenvector matrix: `E ← E·Jᴴ`
/// (right-side operations only — phase on column `j`, then the plane
/// rotation across columns `(i, j)`).
pub fn apply_to_vectors(
    e: &mut CMat,
    pair: (usize, usize),
    params: &PairRotation,
    cordic: &CordicConfig,
    tag: u64,
) {
    params.check_tag(tag);
    if params.skipped {
        return;
    }
    let (i, j) = pair;
    for r in 0..e.rows() {
        let phased = rotate_complex_ext(cordic, lift_c(cordic, e.get(r, j)), &params.theta);
        let (li, rj) =
            rotate_plane_pair_ext(cordic, lift_c(cordic, e.get(r, i)), phased, &params.phi);
        e.set(r, i, settle_c(cordic, li));
        e.set(r, j, settle_c(cordic, rj));
    }
}

/// Eigendecomposition configuration.
#[derive(Debug, Clone)]
pub struct EvdConfig {
    pub sweeps: usize,
    pub cordic: CordicConfig,
    pub pipeline: PipelineModel,
}

impl EvdConfig {
    /// The design point: 20 sweeps of 10-iteration CORDIC on the 10-bit
    /// format, issuing into a 10-cycle pipeline every 2 cycles.
    pub fn design_point() -> Self {
        EvdConfig {
            sweeps: 20,
            cordic: CordicConfig::default_q10(),
            pipeline: PipelineModel::design_point(),
        }
    }
}

/// Result of a full eigendecomposition run.
#[derive(Debug, Clone)]
pub struct EvdResult {
    /// Final working matrix (diagonal plus converged off-diagonal noise).
    pub matrix: CMat,
    /// Accumulated eigenvector matrix `E` with `P ≈ E·diag(λ)·Eᴴ`.
    pub vectors: CMat,
    /// Diagonal of the final matrix, in storage order.
    pub eigenvalues: Vec<FixPoint>,
    /// Worst residual (raw units) overwritten by a structural zero.
    pub max_offdiag_residual_raw: i64,
    /// Lifted off-diagonal Frobenius norm after each sweep.
    pub per_sweep_off_norm: Vec<f64>,
    pub applied_rotations: u64,
    pub skipped_rotations: u64,
    /// Entries of the final matrix and eigenvectors carrying a saturation
    /// flag. Structural-zero writes preserve the flag of the value they
    /// replace, so a nonzero count means saturation happened *somewhere*.
    pub saturation_count: u64,
}

/// Validates that the input is exactly Hermitian at the bit level.
fn validate_hermitian(p: &CMat) -> Result<()> {
    let n = p.rows();
    if n != p.cols() {
        return Err(Error::Config(format!(
            "eigendecomposition needs a square matrix, got {n}×{}",
            p.cols()
        )));
    }
    for i in 0..n {
        if p.get(i, i).im.raw() != 0 {
            return Err(Error::Config(format!(
                "diagonal entry {i} has nonzero imaginary part; input must be Hermitian"
            )));
        }
        for j in (i + 1)..n {
            if p.get(j, i) != p.get(i, j).conj() {
                return Err(Error::Config(format!(
                    "entries ({i},{j}) and ({j},{i}) are not conjugate mirrors; input must be Hermitian"
                )));
            }
        }
    }
    Ok(())
}

/// Runs the full sweep schedule on a Hermitian matrix.
pub fn evd_run(p: &CMat, cfg: &EvdConfig) -> Result<EvdResult> {
    validate_hermitian(p)?;
    let n = p.rows();
    let orderings = parallel_orderings(n)?;
    if cfg.sweeps == 0 || cfg.sweeps > 1000 {
        return Err(Error::Config(format!(
            "sweep count must be in 1..=1000, got {}",
            cfg.sweeps
        )));
    }

    let mut work = p.clone();
    let mut e = CMat::identity(n, p.fmt());
    let mut max_residual = 0i64;
    let mut applied = 0u64;
    let mut skipped = 0u64;
    let mut per_sweep = Vec::with_capacity(cfg.sweeps);

    for sweep in 0..cfg.sweeps {
        for (oi, ordering) in orderings.iter().enumerate() {
            let tag = (sweep * orderings.len() + oi) as u64;

            // Diagonal blocks first: they produce this ordering's parameters.
            let params: Vec<PairRotation> = ordering
                .iter()
                .map(|&(i, j)| {
                    let (rot, residual) = diagonalize_pair(&mut work, i, j, &cfg.cordic, tag);
                    max_residual = max_residual.max(residual);
                    if rot.skipped {
                        skipped += 1;
                    } else {
                        applied += 1;
                    }
                    rot
                })
                .collect();

            // Every off-diagonal block, steered by its row and column pairs.
            let pairs = ordering.len();
            for u in 0..pairs {
                for v in 0..pairs {
                    if u != v {
                        apply_offdiag_block(
                            &mut work,
                            ordering[u],
                            ordering[v],
                            &params[u],
                            &params[v],
                            &cfg.cordic,
                            tag,
                        );
                    }
                }
            }

            // Eigenvector accumulation uses the right-side operations only.
            for (pair, rot) in ordering.iter().zip(params.iter()) {
                apply_to_vectors(&mut e, *pair, rot, &cfg.cordic, tag);
            }
        }
        per_sweep.push(work.to_float().off_diagonal_norm());
    }

    let eigenvalues = (0..n).map(|i| work.get(i, i).re).collect();
    Ok(EvdResult {
        saturation_count: work.saturated_count() + e.saturated_count(),
        eigenvalues,
        max_offdiag_residual_raw: max_residual,
        per_sweep_off_norm: per_sweep,
        applied_rotations: applied,
        skipped_rotations: skipped,
        matrix: work,
        vectors: e,
    })
}
