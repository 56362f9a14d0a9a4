//! Exact counts of noncrossing trees and related families.
//!
//! Two independent routes are provided for the main sequence: a closed
//! form built from one binomial coefficient, and a double recurrence.
//! Both are exact big-integer computations; every division asserts a
//! zero remainder.

// the A / A_1 / A^r sequence names are kept as-is
#![allow(non_snake_case)]

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Exact nonnegative count. All arithmetic in this module stays integral.
pub type BigCount = BigUint;

/// Binomial coefficient by multiplicative accumulation.
///
/// Each intermediate `acc * (n - k + i) / i` is itself a binomial
/// coefficient, so the stepwise division is exact.
pub fn binomial(n: u64, k: u64) -> BigCount {
    if k > n {
        return BigCount::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigCount::one();
    for i in 1..=k {
        acc *= BigUint::from(n - k + i);
        let i = BigUint::from(i);
        debug_assert!((&acc % &i).is_zero(), "binomial accumulation must divide exactly");
        acc /= i;
    }
    acc
}

fn exact_div(num: BigCount, den: u64, what: &str) -> BigCount {
    let den = BigUint::from(den);
    assert!((&num % &den).is_zero(), "{what}: division by {den} left a remainder");
    num / den
}

/// Number of noncrossing trees on `n` boundary vertices, closed form
/// `A(n) = C(3n-3, n-1) / (2n-1)`.
///
/// Panics if `n = 0`; the sequence starts at one vertex.
pub fn count_A(n: u64) -> BigCount {
    assert!(n >= 1, "count_A is defined for n >= 1");
    exact_div(binomial(3 * n - 3, n - 1), 2 * n - 1, "count_A")
}

/// Number of noncrossing trees on `n` vertices whose vertex 1 has degree
/// one: `A_1(1) = 0` and `A_1(n) = 2/(3n-4) * C(3n-4, n-2)` for `n >= 2`.
pub fn count_A1(n: u64) -> BigCount {
    assert!(n >= 1, "count_A1 is defined for n >= 1");
    if n == 1 {
        return BigCount::zero();
    }
    exact_div(
        BigUint::from(2u32) * binomial(3 * n - 4, n - 2),
        3 * n - 4,
        "count_A1",
    )
}

/// `A(n)` through the double recurrence
/// `A_1(n) = sum_j A(j-1) A(n+1-j)` and
/// `A(n) = sum_j A_1(n+2-j) A(j-1)`,
/// evaluated bottom-up. Agrees with [`count_A`] for every `n`.
pub fn count_A_rec(n: u64) -> BigCount {
    assert!(n >= 1, "count_A_rec is defined for n >= 1");
    let n = n as usize;
    // a[m] = A(m), a1[m] = A_1(m), index 0 unused.
    let mut a: Vec<BigCount> = vec![BigCount::zero(); n + 1];
    let mut a1: Vec<BigCount> = vec![BigCount::zero(); n + 1];
    a[1] = BigCount::one();
    for m in 2..=n {
        let mut s = BigCount::zero();
        for j in 2..=m {
            s += &a[j - 1] * &a[m + 1 - j];
        }
        a1[m] = s;
        let mut s = BigCount::zero();
        for j in 2..=m {
            s += &a1[m + 2 - j] * &a[j - 1];
        }
        a[m] = s;
    }
    a[n].clone()
}

/// `A_1(n)` through the recurrence route (shares the table with
/// [`count_A_rec`]).
pub fn count_A1_rec(n: u64) -> BigCount {
    assert!(n >= 1, "count_A1_rec is defined for n >= 1");
    if n == 1 {
        return BigCount::zero();
    }
    let mut s = BigCount::zero();
    for j in 2..=n {
        s += count_A_rec(j - 1) * count_A_rec(n + 1 - j);
    }
    s
}

/// Number of noncrossing trees on `n` vertices modulo rotation:
/// `A^r(n) = ( A(n) + [n even] (n/2) A_1(n/2 + 1) ) / n`.
pub fn count_Ar(n: u64) -> BigCount {
    assert!(n >= 1, "count_Ar is defined for n >= 1");
    let mut total = count_A(n);
    if n % 2 == 0 {
        total += BigUint::from(n / 2) * count_A1(n / 2 + 1);
    }
    exact_div(total, n, "count_Ar")
}

/// Number of ordered rooted ternary trees with `m` internal vertices:
/// `T(m) = A(m+1)`.
pub fn count_ternary(m: u64) -> BigCount {
    count_A(m + 1)
}

/// Number of generic strata in the parameter space of monic centred
/// fields of degree `k+1`: `A(k+2)`.
pub fn strata_count(k: u64) -> BigCount {
    count_A(k + 2)
}
