use num_traits::{One, Zero};

use crate::rational::Rational;

/// Progress rate shared by every running sub-job: `min(1, B / sum(b_i))`.
///
/// Over `w` wall cycles each running sub-job accrues `r * w` cycles of
/// work, so all overlapping sub-jobs see the same relative slowdown.
pub fn contention_rate<'a, I>(demands: I, dram_bandwidth: &Rational) -> Rational
where
    I: IntoIterator<Item = &'a Rational>,
{
    let total: Rational = demands.into_iter().fold(Rational::zero(), |acc, b| acc + b);
    if total <= *dram_bandwidth || total.is_zero() {
        Rational::one()
    } else {
        dram_bandwidth / total
    }
}
