//! k-term subset sum checked digit by digit in base n with bounded carries.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

pub const DEFAULT_MAX_SUBSETS: u64 = 20_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubsetSumError {
    #[error("instance has no values")]
    NoValues,
    #[error("base must be at least 2, got {0}")]
    BaseTooSmall(u64),
    #[error("value {value} does not fit in {width} digits of base {base}")]
    OutOfRange { value: BigUint, base: u64, width: usize },
    #[error("f(k) = {given} allows {} digits but {needed} are needed", given + 1)]
    WidthTooSmall { given: u32, needed: usize },
    #[error("subset has {got} indices but k = {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("index {index} is out of range for {n} values")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("index {0} is repeated")]
    DuplicateIndex(usize),
    #[error("carry arithmetic overflowed")]
    Overflow,
    #[error("search space of {count} subsets exceeds the cap of {cap}")]
    TooManyCandidates { count: u128, cap: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetSumInstance {
    values: Vec<BigUint>,
    target: BigUint,
    k: usize,
    f_of_k: Option<u32>,
}

impl SubsetSumInstance {
    pub fn new(values: Vec<BigUint>, target: BigUint, k: usize, f_of_k: Option<u32>) -> Result<Self, SubsetSumError> {
        if values.is_empty() {
            return Err(SubsetSumError::NoValues);
        }
        let inst = SubsetSumInstance {
            values,
            target,
            k,
            f_of_k,
        };
        // width derivation doubles as range validation
        DigitTables::build(&inst.values, &inst.target, inst.base(), inst.f_of_k)?;
        Ok(inst)
    }

    pub fn values(&self) -> &[BigUint] {
        &self.values
    }

    pub fn target(&self) -> &BigUint {
        &self.target
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn f_of_k(&self) -> Option<u32> {
        self.f_of_k
    }

    /// `max(n, 2)`.
    pub fn base(&self) -> u64 {
        self.values.len().max(2) as u64
    }

    pub fn tables(&self) -> DigitTables {
        DigitTables::build(&self.values, &self.target, self.base(), self.f_of_k).expect("validated at construction")
    }

    /// Exact comparison of the subset sum with the target.
    pub fn exact_check(&self, subset: &[usize]) -> bool {
        subset.iter().map(|&i| &self.values[i]).sum::<BigUint>() == self.target
    }
}

/// Least-significant-first base-`base` digits of `value`, exactly `width` of them.
pub fn digits(value: &BigUint, base: u64, width: usize) -> Result<Vec<u64>, SubsetSumError> {
    if base < 2 {
        return Err(SubsetSumError::BaseTooSmall(base));
    }
    let b = BigUint::from(base);
    let mut rest = value.clone();
    let mut out = Vec::with_capacity(width);
    for _ in 0..width {
        let (q, r) = rest.div_rem(&b);
        out.push(r.to_u64().expect("digit below base"));
        rest = q;
    }
    if !rest.is_zero() {
        return Err(SubsetSumError::OutOfRange {
            value: value.clone(),
            base,
            width,
        });
    }
    Ok(out)
}

fn digit_count(value: &BigUint, base: u64) -> usize {
    let b = BigUint::from(base);
    let mut rest = value.clone();
    let mut n = 1;
    while rest >= b {
        rest /= &b;
        n += 1;
    }
    n
}

/// Digit matrix of the values (row per value) and digit vector of the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitTables {
    base: u64,
    width: usize,
    x_digits: Vec<Vec<u64>>,
    t_digits: Vec<u64>,
}

impl DigitTables {
    /// Width is the digit count of the largest number, or `f(k) + 1` when
    /// supplied; a supplied `f(k)` that is too small is an error.
    pub fn build(values: &[BigUint], target: &BigUint, base: u64, f_of_k: Option<u32>) -> Result<Self, SubsetSumError> {
        if base < 2 {
            return Err(SubsetSumError::BaseTooSmall(base));
        }
        let needed = values
            .iter()
            .chain(std::iter::once(target))
            .map(|v| digit_count(v, base))
            .max()
            .unwrap_or(1);
        let width = match f_of_k {
            Some(f) if (f as usize) + 1 < needed => return Err(SubsetSumError::WidthTooSmall { given: f, needed }),
            Some(f) => f as usize + 1,
            None => needed,
        };
        Ok(DigitTables {
            base,
            width,
            x_digits: values
                .iter()
                .map(|v| digits(v, base, width))
                .collect::<Result<_, _>>()?,
            t_digits: digits(target, base, width)?,
        })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n(&self) -> usize {
        self.x_digits.len()
    }

    pub fn x_digits(&self) -> &[Vec<u64>] {
        &self.x_digits
    }

    pub fn t_digits(&self) -> &[u64] {
        &self.t_digits
    }
}

/// Outcome of one carry-propagation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CarryTrace {
    pub accepted: bool,
    /// `c_0, c_1, …` as far as the run got.
    pub carries: Vec<u64>,
    /// Largest dividend `c_{j-1} + Σ digits` seen.
    pub max_dividend: u64,
}

impl CarryTrace {
    pub fn max_carry(&self) -> u64 {
        self.carries.iter().copied().max().unwrap_or(0)
    }
}

fn check_indices(subset: &[usize], n: usize, k: usize) -> Result<(), SubsetSumError> {
    if subset.len() != k {
        return Err(SubsetSumError::SizeMismatch {
            expected: k,
            got: subset.len(),
        });
    }
    for (pos, &i) in subset.iter().enumerate() {
        if i >= n {
            return Err(SubsetSumError::IndexOutOfRange { index: i, n });
        }
        if subset[..pos].contains(&i) {
            return Err(SubsetSumError::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Decides `Σ_{i ∈ subset} x_i = t` with machine words only: for each digit
/// position the carry plus the selected digits is divided by the base, the
/// remainder must match the target digit, and the final carry must be zero.
pub fn check_sum(subset: &[usize], tables: &DigitTables, k: usize) -> Result<CarryTrace, SubsetSumError> {
    check_indices(subset, tables.n(), k)?;
    let mut carry = 0u64;
    let mut trace = CarryTrace {
        accepted: false,
        carries: Vec::with_capacity(tables.width),
        max_dividend: 0,
    };
    for j in 0..tables.width {
        let mut dividend = carry;
        for &i in subset {
            dividend = dividend
                .checked_add(tables.x_digits[i][j])
                .ok_or(SubsetSumError::Overflow)?;
        }
        trace.max_dividend = trace.max_dividend.max(dividend);
        let (quotient, remainder) = (dividend / tables.base, dividend % tables.base);
        carry = quotient;
        trace.carries.push(carry);
        debug_assert!(carry <= k as u64 + 1);
        if remainder != tables.t_digits[j] {
            return Ok(trace);
        }
    }
    trace.accepted = carry == 0;
    Ok(trace)
}

/// Lexicographic k-subsets of `0..n`.
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }

    pub fn count_total(n: usize, k: usize) -> u128 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        self.done = true;
        for i in (0..k).rev() {
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                self.done = false;
                break;
            }
        }
        Some(out)
    }
}

/// First k-subset (lexicographic, 0-based) whose sum hits the target.
pub fn solve(inst: &SubsetSumInstance, max_subsets: u64) -> Result<Option<Vec<usize>>, SubsetSumError> {
    let count = Combinations::count_total(inst.n(), inst.k());
    if count > max_subsets as u128 {
        return Err(SubsetSumError::TooManyCandidates { count, cap: max_subsets });
    }
    let tables = inst.tables();
    for subset in Combinations::new(inst.n(), inst.k()) {
        if check_sum(&subset, &tables, inst.k())?.accepted {
            return Ok(Some(subset));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn inst(values: &[u64], t: u64, k: usize) -> SubsetSumInstance {
        SubsetSumInstance::new(values.iter().map(|&v| big(v)).collect(), big(t), k, None).unwrap()
    }

    #[test]
    fn digit_examples() {
        assert_eq!(digits(&big(11), 4, 2).unwrap(), vec![3, 2]);
        assert_eq!(digits(&big(0), 7, 3).unwrap(), vec![0, 0, 0]);
        assert_eq!(digits(&big(5), 4, 3).unwrap(), vec![1, 1, 0]);
        assert!(matches!(digits(&big(16), 4, 2), Err(SubsetSumError::OutOfRange { .. })));
        assert_eq!(digits(&big(3), 1, 2), Err(SubsetSumError::BaseTooSmall(1)));
    }

    #[test]
    fn check_sum_examples() {
        let i = inst(&[5, 3, 9, 6], 11, 2);
        let t = i.tables();
        assert!(check_sum(&[0, 3], &t, 2).unwrap().accepted);
        assert!(!check_sum(&[1, 2], &t, 2).unwrap().accepted);

        let i = inst(&[3, 3, 2, 1], 6, 2);
        let t = i.tables();
        assert_eq!(t.t_digits(), &[2, 1]);
        let trace = check_sum(&[0, 1], &t, 2).unwrap();
        assert!(trace.accepted);
        assert_eq!(trace.carries, vec![1, 0]);
        assert_eq!(trace.max_dividend, 6);
    }

    #[test]
    fn precondition_errors() {
        let i = inst(&[5, 3, 9, 6], 11, 2);
        let t = i.tables();
        assert!(matches!(check_sum(&[0], &t, 2), Err(SubsetSumError::SizeMismatch { .. })));
        assert_eq!(check_sum(&[0, 0], &t, 2), Err(SubsetSumError::DuplicateIndex(0)));
        assert!(matches!(check_sum(&[0, 9], &t, 2), Err(SubsetSumError::IndexOutOfRange { .. })));
        assert_eq!(
            SubsetSumInstance::new(vec![], big(0), 0, None),
            Err(SubsetSumError::NoValues)
        );
    }

    #[test]
    fn width_from_f_of_k() {
        // n = 4: 63 needs 3 base-4 digits
        let values = vec![big(63), big(1), big(2), big(3)];
        assert_eq!(
            SubsetSumInstance::new(values.clone(), big(0), 1, Some(1)),
            Err(SubsetSumError::WidthTooSmall { given: 1, needed: 3 })
        );
        let i = SubsetSumInstance::new(values, big(0), 1, Some(4)).unwrap();
        assert_eq!(i.tables().width(), 5);
        assert_eq!(i.tables().base(), 4);
    }

    #[test]
    fn solve_examples() {
        assert_eq!(solve(&inst(&[5, 3, 9, 6], 11, 2), 1000).unwrap(), Some(vec![0, 3]));
        assert_eq!(solve(&inst(&[5, 3, 9, 6], 0, 0), 1000).unwrap(), Some(vec![]));
        assert_eq!(solve(&inst(&[5, 3, 9, 6], 24, 2), 1000).unwrap(), None);
        for k in 0..=5 {
            assert_eq!(solve(&inst(&[5, 3, 9, 6], 24, k), 1000).unwrap(), None);
        }
        assert!(matches!(
            solve(&inst(&[1; 30], 3, 15), 1000),
            Err(SubsetSumError::TooManyCandidates { .. })
        ));
    }

    #[test]
    fn single_value_uses_base_two() {
        let i = inst(&[5], 5, 1);
        assert_eq!(i.base(), 2);
        assert_eq!(solve(&i, 10).unwrap(), Some(vec![0]));
    }

    #[test]
    fn combinations_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(Combinations::new(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        assert_eq!(Combinations::count_total(20, 4), 4845);
    }
}
