//! Element-level model of the complex multiply-accumulate array.
//!
//! The array holds `m` complex processing elements and computes
//! `P = X·Yᴴ / 2^acc_shift` for two `m×n` operand blocks, one
//! multiply-broadcast per cycle:
//!
//! * the outer step latches column `k` of `X` into the PE input registers,
//! * each inner step broadcasts the conjugate of one element `Y[j][k]` to all
//!   PEs, which accumulate `X[i][k]·conj(Y[j][k])` into accumulator `(i, j)`.
//!
//! That is `m` complex MACs per cycle and exactly `m·n` cycles per block.
//! Accumulation is exact (wide registers, no intermediate rounding); the
//! single round-to-nearest-even happens at writeback, where `acc_shift`
//! extra shift bits implement the divide-by-sample-count of a covariance
//! average for free.

use crate::error::{Error, Result};
use crate::fixedpoint::{CProductAcc, FixFormat};
use crate::matrix::CMat;

/// Hardware inventory of one array instance, in real-valued units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EcmmaCensus {
    /// Real multiplier-accumulator elements (two per complex PE).
    pub processing_elements: u32,
    /// Real adders combining partial products.
    pub adders: u32,
    /// Operand-steering multiplexors.
    pub multiplexors: u32,
    /// Data registers: accumulators plus the latched input column.
    pub registers: u32,
}

/// Result of one block multiplication: the product and its cycle cost.
#[derive(Debug, Clone)]
pub struct EcmmaResult {
    pub product: CMat,
    pub cycles: u64,
}

/// A configured multiply-accumulate array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ecmma {
    pes: usize,
    fmt: FixFormat,
    acc_shift: u32,
}

impl Ecmma {
    /// Creates an array with `pes` complex processing elements.
    ///
    /// `acc_shift` is the extra right shift applied at writeback; pass
    /// `log2(sample count)` to turn the accumulated outer product into an
    /// average, or `0` for a plain product.
    pub fn new(pes: usize, fmt: FixFormat, acc_shift: u32) -> Result<Self> {
        if pes == 0 || pes > 64 {
            return Err(Error::Config(format!(
                "processing element count must be in 1..=64, got {pes}"
            )));
        }
        if acc_shift > 32 {
            return Err(Error::Config(format!(
                "accumulator shift must be at most 32, got {acc_shift}"
            )));
        }
        Ok(Ecmma {
            pes,
            fmt,
            acc_shift,
        })
    }

    /// Number of complex processing elements.
    pub fn pes(&self) -> usize {
        self.pes
    }

    /// Writeback shift (0 for a plain product).
    pub fn acc_shift(&self) -> u32 {
        self.acc_shift
    }

    /// Element format.
    pub fn fmt(&self) -> FixFormat {
        self.fmt
    }

    /// Hardware inventory for this PE count.
    pub fn census(&self) -> EcmmaCensus {
        let m = self.pes as u32;
        EcmmaCensus {
            processing_elements: 2 * m,
            adders: 2 * m,
            multiplexors: 4 * m,
            registers: 2 * m * m + 2 * m,
        }
    }

    /// Cycle cost of one block with `steps` operand columns.
    pub fn block_cycles(&self, steps: usize) -> u64 {
        (self.pes * steps) as u64
    }

    /// Computes `X·Yᴴ / 2^acc_shift` for two `pes×n` blocks.
    ///
    /// The conjugation happens at operand fetch, inside the wide multiplier,
    /// so it is exact. Accumulator order is the hardware's column-major
    /// sweep; because partial products are exact, any summation order yields
    /// the same bits.
    pub fn multiply_conj(&self, x: &CMat, y: &CMat) -> EcmmaResult {
        assert_eq!(
            x.rows(),
            self.pes,
            "x must have one row per processing element"
        );
        assert_eq!(
            y.rows(),
            self.pes,
            "y must have one row per processing element"
        );
        assert_eq!(
            x.cols(),
            y.cols(),
            "operand blocks must share their step count"
        );
        assert!(
            x.fmt() == self.fmt && y.fmt() == self.fmt,
            "format mismatch in array operands"
        );

        let m = self.pes;
        let n = x.cols();
        let mut acc: Vec<CProductAcc> = (0..m * m).map(|_| CProductAcc::new(self.fmt)).collect();
        for k in 0..n {
            // Column k of X sits latched while Y's column streams past.
            for j in 0..m {
                let yjk = y.get(j, k);
                for i in 0..m {
                    acc[i * m + j].mac_conj(x.get(i, k), yjk);
                }
            }
        }
        let mut product = CMat::zeros(m, m, self.fmt);
        for i in 0..m {
            for j in 0..m {
                product.set(i, j, acc[i * m + j].writeback(self.acc_shift));
            }
        }
        EcmmaResult {
            product,
            cycles: self.block_cycles(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::CFix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_block(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max_raw: i64) -> CMat {
        let fmt = FixFormat::q10_8();
        let mut m = CMat::zeros(rows, cols, fmt);
        for i in 0..rows {
            for j in 0..cols {
                let re = fmt.from_raw(rng.gen_range(-max_raw..=max_raw));
                let im = fmt.from_raw(rng.gen_range(-max_raw..=max_raw));
                m.set(i, j, CFix::new(re, im));
            }
        }
        m
    }

    /// Independent reference: plain i128 sums in a different loop order,
    /// rounded once at the end exactly like the writeback contract.
    fn naive_product(x: &CMat, y: &CMat, acc_shift: u32) -> CMat {
        let fmt = x.fmt();
        let m = x.rows();
        let mut out = CMat::zeros(m, m, fmt);
        for i in 0..m {
            for j in 0..m {
                let (mut sre, mut sim) = (0i128, 0i128);
                for k in 0..x.cols() {
                    let a = x.get(i, k);
                    let b = y.get(j, k);
                    let (ar, ai) = (a.re.raw() as i128, a.im.raw() as i128);
                    let (br, bi) = (b.re.raw() as i128, -(b.im.raw() as i128));
                    sre += ar * br - ai * bi;
                    sim += ar * bi + ai * br;
                }
                let shift = fmt.frac_bits() + acc_shift;
                let round = |v: i128| -> i64 {
                    let f = crate::fixedpoint::rne_shift_i128(v, shift);
                    i64::try_from(f)
                        .unwrap()
                        .clamp(fmt.min_raw(), fmt.max_raw())
                };
                out.set(
                    i,
                    j,
                    CFix::new(fmt.from_raw(round(sre)), fmt.from_raw(round(sim))),
                );
            }
        }
        out
    }

    #[test]
    fn matches_float_oracle_within_one_lsb() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACC);
        for &(m, n) in &[(2usize, 8usize), (2, 64), (4, 32), (3, 16)] {
            let array = Ecmma::new(m, FixFormat::q10_8(), 0).unwrap();
            // Small raws keep the unshifted product in range.
            let x = random_block(&mut rng, m, n, 40);
            let y = random_block(&mut rng, m, n, 40);
            let got = array.multiply_conj(&x, &y).product.to_float();
            let want = x.to_float().matmul(&y.to_float().hermitian());
            assert!(
                got.max_component_diff(&want) <= 1.0 / 256.0,
                "m={m} n={n}: worst diff {}",
                got.max_component_diff(&want)
            );
        }
    }

    #[test]
    fn averaging_shift_matches_float_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0F);
        let n = 256usize;
        let array = Ecmma::new(2, FixFormat::q10_8(), n.ilog2()).unwrap();
        // ±250 raw keeps the averaged self-power (≈ 2·0.95²/3) inside the format.
        let x = random_block(&mut rng, 2, n, 250);
        let got = array.multiply_conj(&x, &x).product.to_float();
        let want = x
            .to_float()
            .matmul(&x.to_float().hermitian())
            .scale(1.0 / n as f64);
        assert!(got.max_component_diff(&want) <= 1.0 / 256.0);
    }

    #[test]
    fn bit_identical_to_independent_wide_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB17);
        for case in 0..200 {
            let m = [2usize, 3, 4][case % 3];
            let n = 1 + (case * 7) % 96;
            let shift = (case % 4) as u32;
            let array = Ecmma::new(m, FixFormat::q10_8(), shift).unwrap();
            let x = random_block(&mut rng, m, n, 511);
            let y = random_block(&mut rng, m, n, 511);
            let got = array.multiply_conj(&x, &y).product;
            let want = naive_product(&x, &y, shift);
            for i in 0..m {
                for j in 0..m {
                    assert_eq!(
                        got.get(i, j).re.raw(),
                        want.get(i, j).re.raw(),
                        "case {case} re ({i},{j})"
                    );
                    assert_eq!(
                        got.get(i, j).im.raw(),
                        want.get(i, j).im.raw(),
                        "case {case} im ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn block_cost_is_pes_times_steps() {
        for m in [1usize, 2, 4, 8] {
            let array = Ecmma::new(m, FixFormat::q10_8(), 0).unwrap();
            for n in [1usize, 5, 64, 512] {
                assert_eq!(array.block_cycles(n), (m * n) as u64);
                let x = CMat::zeros(m, n, FixFormat::q10_8());
                assert_eq!(array.multiply_conj(&x, &x).cycles, (m * n) as u64);
            }
        }
    }

    #[test]
    fn census_scales_with_pe_count() {
        for (m, regs) in [(2u32, 12u32), (4, 40), (8, 144)] {
            let c = Ecmma::new(m as usize, FixFormat::q10_8(), 0)
                .unwrap()
                .census();
            assert_eq!(c.processing_elements, 2 * m);
            assert_eq!(c.adders, 2 * m);
            assert_eq!(c.multiplexors, 4 * m);
            assert_eq!(c.registers, regs);
        }
    }

    #[test]
    fn self_product_is_hermitian_at_bit_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4E2);
        let array = Ecmma::new(4, FixFormat::q10_8(), 6).unwrap();
        let x = random_block(&mut rng, 4, 64, 300);
        let p = array.multiply_conj(&x, &x).product;
        for i in 0..4 {
            assert_eq!(p.get(i, i).im.raw(), 0, "diagonal must be exactly real");
            for j in 0..4 {
                assert_eq!(p.get(i, j).re.raw(), p.get(j, i).re.raw());
                assert_eq!(p.get(i, j).im.raw(), -p.get(j, i).im.raw());
            }
        }
    }

    #[test]
    fn constant_rows_average_to_exact_power() {
        // Row of constant (0.5 + 0.5i): self covariance = |z|² = 0.5 exactly.
        let fmt = FixFormat::q10_8();
        let n = 128usize;
        let mut x = CMat::zeros(1, n, fmt);
        for k in 0..n {
            x.set(0, k, CFix::quantize(fmt, 0.5, 0.5));
        }
        let array = Ecmma::new(1, fmt, n.ilog2()).unwrap();
        let p = array.multiply_conj(&x, &x).product;
        assert_eq!(p.get(0, 0).re.raw(), 128);
        assert_eq!(p.get(0, 0).im.raw(), 0);
    }

    #[test]
    fn in_range_operands_never_set_saturation_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0);
        let array = Ecmma::new(2, FixFormat::q10_8(), 9).unwrap();
        let x = random_block(&mut rng, 2, 512, 250);
        let p = array.multiply_conj(&x, &x).product;
        assert_eq!(p.saturated_count(), 0);
    }

    #[test]
    fn oversized_accumulation_saturates_and_flags() {
        // Full-scale constant rows with no averaging overflow the format.
        let fmt = FixFormat::q10_8();
        let mut x = CMat::zeros(1, 16, fmt);
        for k in 0..16 {
            x.set(0, k, CFix::quantize(fmt, 1.5, 0.0));
        }
        let array = Ecmma::new(1, fmt, 0).unwrap();
        let p = array.multiply_conj(&x, &x).product;
        assert_eq!(p.get(0, 0).re.raw(), fmt.max_raw());
        assert!(p.get(0, 0).saturated());
    }

    #[test]
    fn same_seed_reproduces_identical_bits() {
        let run = |seed: u64| -> Vec<i64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let array = Ecmma::new(2, FixFormat::q10_8(), 5).unwrap();
            let x = random_block(&mut rng, 2, 32, 500);
            let y = random_block(&mut rng, 2, 32, 500);
            array
                .multiply_conj(&x, &y)
                .product
                .elements()
                .iter()
                .flat_map(|z| [z.re.raw(), z.im.raw()])
                .collect()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }
}
