//! Angular-momentum algebra for the ionic-core electric-dipole lines.
//!
//! Angular momenta are passed doubled (`two_j`, `two_m`) so half-integer
//! values stay exact.

use serde::{Deserialize, Serialize};

use super::levels::{CoreLevel, CoreTerm};

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3), all arguments doubled.
///
/// Racah's single-sum formula; exact enough for the small j used here.
pub fn wigner_3j(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    if tm1 + tm2 + tm3 != 0 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm3.abs() > tj3 {
        return 0.0;
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj3 + tm3) % 2 != 0 {
        return 0.0;
    }
    if tj3 > tj1 + tj2 || tj3 < (tj1 - tj2).abs() || (tj1 + tj2 + tj3) % 2 != 0 {
        return 0.0;
    }
    // Undoubled integer combinations.
    let a = (tj1 + tj2 - tj3) / 2;
    let b = (tj1 - tj2 + tj3) / 2;
    let c = (-tj1 + tj2 + tj3) / 2;
    let total = (tj1 + tj2 + tj3) / 2;
    let delta = factorial(a) * factorial(b) * factorial(c) / factorial(total + 1);
    let norm = factorial((tj1 + tm1) / 2)
        * factorial((tj1 - tm1) / 2)
        * factorial((tj2 + tm2) / 2)
        * factorial((tj2 - tm2) / 2)
        * factorial((tj3 + tm3) / 2)
        * factorial((tj3 - tm3) / 2);

    let t1 = (tj3 - tj2 + tm1) / 2;
    let t2 = (tj3 - tj1 - tm2) / 2;
    let t3 = a;
    let t4 = (tj1 - tm1) / 2;
    let t5 = (tj2 + tm2) / 2;
    let k_min = 0.max(-t1).max(-t2);
    let k_max = t3.min(t4).min(t5);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(t1 + k)
            * factorial(t2 + k)
            * factorial(t3 - k)
            * factorial(t4 - k)
            * factorial(t5 - k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    let phase_exp = (tj1 - tj2 - tm3) / 2;
    let phase = if phase_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * (delta * norm).sqrt() * sum
}

/// Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | J M⟩, all doubled.
pub fn clebsch_gordan(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
    let phase_exp = (tj1 - tj2 + tm) / 2;
    let phase = if phase_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * f64::from(tj + 1).sqrt() * wigner_3j(tj1, tj2, tj, tm1, tm2, -tm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    Pi,
    SigmaPlus,
    SigmaMinus,
}

impl Polarization {
    pub const ALL: [Polarization; 3] =
        [Polarization::Pi, Polarization::SigmaPlus, Polarization::SigmaMinus];

    /// Doubled Δm = m_upper − m_lower carried by the photon.
    pub fn two_q(self) -> i8 {
        match self {
            Polarization::Pi => 0,
            Polarization::SigmaPlus => 2,
            Polarization::SigmaMinus => -2,
        }
    }
}

fn dipole_upper_lower(a: CoreTerm, b: CoreTerm) -> Option<(bool, CoreTerm, CoreTerm)> {
    use CoreTerm::*;
    match (a, b) {
        (P12, S12) | (P12, D32) => Some((true, a, b)),
        (S12, P12) | (D32, P12) => Some((false, b, a)),
        _ => None,
    }
}

/// Relative strength of one Zeeman component of a core electric-dipole line.
///
/// Squared 3j coefficient times (2j_upper + 1), so that summing over the
/// lower sublevels of one term and all polarizations gives 1 for every
/// upper sublevel. The polarization refers to m_upper − m_lower. Forbidden
/// components (wrong Δm, no E1 step between the terms) return 0.
pub fn core_line_strengths(pol: Polarization, from: CoreLevel, to: CoreLevel) -> f64 {
    let Some((from_is_upper, upper_term, lower_term)) = dipole_upper_lower(from.term, to.term)
    else {
        return 0.0;
    };
    let (upper, lower) = if from_is_upper { (from, to) } else { (to, from) };
    debug_assert_eq!(upper.term, upper_term);
    debug_assert_eq!(lower.term, lower_term);
    if upper.two_mj - lower.two_mj != pol.two_q() {
        return 0.0;
    }
    let tju = i32::from(upper_term.two_j());
    let tjl = i32::from(lower_term.two_j());
    let w = wigner_3j(
        tjl,
        2,
        tju,
        i32::from(lower.two_mj),
        i32::from(pol.two_q()),
        -i32::from(upper.two_mj),
    );
    f64::from(tju + 1) * w * w
}

/// Polarization connecting two sublevels, if any.
pub fn connecting_polarization(a: CoreLevel, b: CoreLevel) -> Option<Polarization> {
    let (_, _, _) = dipole_upper_lower(a.term, b.term)?;
    let (upper, lower) = if a.term == CoreTerm::P12 { (a, b) } else { (b, a) };
    Polarization::ALL
        .into_iter()
        .find(|p| p.two_q() == upper.two_mj - lower.two_mj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lvl(term: CoreTerm, two_mj: i8) -> CoreLevel {
        CoreLevel::new(term, two_mj).unwrap()
    }

    #[test]
    fn known_3j_values() {
        // (1 1 0; 0 0 0) = -1/sqrt(3)
        assert_relative_eq!(wigner_3j(2, 2, 0, 0, 0, 0), -1.0 / 3f64.sqrt(), epsilon = 1e-14);
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/sqrt(6)
        assert_relative_eq!(wigner_3j(1, 1, 2, 1, -1, 0), 1.0 / 6f64.sqrt(), epsilon = 1e-14);
        // (2 2 2; 0 0 0) = -sqrt(2/35)
        assert_relative_eq!(wigner_3j(4, 4, 4, 0, 0, 0), -(2.0f64 / 35.0).sqrt(), epsilon = 1e-14);
        assert_eq!(wigner_3j(2, 2, 2, 0, 0, 0), 0.0);
    }

    #[test]
    fn clebsch_gordan_orthonormal_columns() {
        // Coupling j1=3/2 with j2=1: sum over m1,m2 of |CG|^2 for fixed J,M is 1.
        for tj in [1, 3, 5] {
            for tm in (-tj..=tj).step_by(2) {
                let mut s = 0.0;
                for tm1 in (-3..=3).step_by(2) {
                    for tm2 in [-2, 0, 2] {
                        let c = clebsch_gordan(3, tm1, 2, tm2, tj, tm);
                        s += c * c;
                    }
                }
                assert_relative_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stretched_d_state_is_pi_dark() {
        let d = lvl(CoreTerm::D32, 3);
        for p in CoreTerm::P12.sublevels() {
            assert_eq!(core_line_strengths(Polarization::Pi, d, p), 0.0);
        }
    }

    #[test]
    fn p_to_d_branching_values() {
        let p = lvl(CoreTerm::P12, 1);
        let s = |pol, mj| core_line_strengths(pol, p, lvl(CoreTerm::D32, mj));
        assert_relative_eq!(s(Polarization::SigmaMinus, 3), 0.5, epsilon = 1e-14);
        assert_relative_eq!(s(Polarization::Pi, 1), 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(s(Polarization::SigmaPlus, -1), 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn sum_rules() {
        for lower in [CoreTerm::S12, CoreTerm::D32] {
            for p in CoreTerm::P12.sublevels() {
                let total: f64 = lower
                    .sublevels()
                    .flat_map(|l| Polarization::ALL.map(|pol| core_line_strengths(pol, p, l)))
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "{lower:?} {p}: {total}");
            }
        }
    }

    #[test]
    fn reflection_symmetry_and_forbidden() {
        let a = core_line_strengths(Polarization::Pi, lvl(CoreTerm::D32, 1), lvl(CoreTerm::P12, 1));
        let b =
            core_line_strengths(Polarization::Pi, lvl(CoreTerm::D32, -1), lvl(CoreTerm::P12, -1));
        assert_relative_eq!(a, b, epsilon = 1e-15);
        // s <-> d is not an E1 step
        assert_eq!(
            core_line_strengths(Polarization::Pi, lvl(CoreTerm::S12, 1), lvl(CoreTerm::D32, 1)),
            0.0
        );
        // wrong polarization
        assert_eq!(
            core_line_strengths(
                Polarization::SigmaPlus,
                lvl(CoreTerm::D32, 1),
                lvl(CoreTerm::P12, 1)
            ),
            0.0
        );
    }
}
