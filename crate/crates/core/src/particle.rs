//! Relativistic point particle driven by the field gradient.
//!
//! The state carries the relativistic momentum `p = gamma * u` (natural
//! units), so the speed `|u| = |p| / sqrt(1 + |p|^2)` stays below 1 by
//! construction. When driven by the interleaved loop, `p` is staggered half a
//! step behind `q` (leapfrog), mirroring the field's `phi`/`phi_dot` split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Vec2;
use crate::units::{LAMBDA_C, T_C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    /// Position.
    pub q: Vec2,
    /// Relativistic momentum `gamma * u`.
    pub p: Vec2,
    pub time: f64,
}

impl ParticleState {
    pub fn new(q: Vec2, p: Vec2) -> Self {
        ParticleState { q, p, time: 0.0 }
    }

    pub fn gamma(&self) -> f64 {
        (1.0 + self.p.norm_sq()).sqrt()
    }

    pub fn velocity(&self) -> Vec2 {
        self.p * (1.0 / self.gamma())
    }

    pub fn speed(&self) -> f64 {
        self.p.norm() / self.gamma()
    }
}

/// One momentum-first step under the force `gamma^{-1} b grad`.
///
/// The `gamma^{-1}` prefactor is evaluated at the momentum midpoint via a
/// single predictor pass, which keeps the update explicit and second-order:
///
/// ```text
/// p*    = p + dt * b/gamma(p) * grad
/// p'    = p + dt * b/gamma((p + p*)/2) * grad
/// q'    = q + dt * p'/gamma(p')
/// ```
pub fn step_particle(state: &ParticleState, grad: Vec2, b: f64, dt: f64) -> Result<ParticleState> {
    let p = state.p;
    let kick = grad * (dt * b);
    let predictor = p + kick * (1.0 / state.gamma());
    let mid = (p + predictor) * 0.5;
    let gamma_mid = (1.0 + mid.norm_sq()).sqrt();
    let p_new = p + kick * (1.0 / gamma_mid);
    let gamma_new = (1.0 + p_new.norm_sq()).sqrt();
    let q_new = state.q + p_new * (dt / gamma_new);
    if !p_new.is_finite() || !q_new.is_finite() {
        return Err(Error::config(format!(
            "non-finite particle state at t = {:.4}: q = {:?}, p = {:?}",
            state.time + dt,
            q_new,
            p_new
        )));
    }
    Ok(ParticleState { q: q_new, p: p_new, time: state.time + dt })
}

/// Local effective rest mass `1 + b^2/4pi - b phi(q_p)`.
///
/// The constant `b^2/4pi` counterterm offsets the binding energy of the
/// particle's own regularized field well; with the kernel width at its
/// calibrated value the dressed mass stays at the bare mass and the reduced
/// (kinetic-momentum) equations of motion emerge.
pub fn local_mass(phi_at: f64, b: f64) -> f64 {
    1.0 + b * b / (4.0 * std::f64::consts::PI) - b * phi_at
}

/// Canonical-momentum step for the coupled loop.
///
/// Advances `pi = local_mass * gamma u` under the force `gamma^{-1} b grad`
/// (the Lagrangian momentum update, of which [`step_particle`] is the
/// `phi -> 0` reduction), then recovers the kinetic momentum through the
/// sampled local mass and drifts the position. Returns the new state and the
/// new canonical momentum.
pub fn step_particle_canonical(
    state: &ParticleState,
    pi: Vec2,
    grad: Vec2,
    phi_at: f64,
    b: f64,
    dt: f64,
) -> Result<(ParticleState, Vec2)> {
    let m_loc = local_mass(phi_at, b);
    if !(m_loc > 0.05) {
        return Err(Error::NotEquilibrated(format!(
            "local effective mass collapsed to {m_loc:.3} at t = {:.4}",
            state.time
        )));
    }
    let kick = grad * (dt * b);
    let pi_pred = pi + kick * (1.0 / state.gamma());
    let p_pred = pi_pred * (1.0 / m_loc);
    let mid = (state.p + p_pred) * 0.5;
    let gamma_mid = (1.0 + mid.norm_sq()).sqrt();
    let pi_new = pi + kick * (1.0 / gamma_mid);
    let p_new = pi_new * (1.0 / m_loc);
    let gamma_new = (1.0 + p_new.norm_sq()).sqrt();
    let q_new = state.q + p_new * (dt / gamma_new);
    if !p_new.is_finite() || !q_new.is_finite() {
        return Err(Error::config(format!(
            "non-finite particle state at t = {:.4}: q = {:?}, p = {:?}",
            state.time + dt,
            q_new,
            p_new
        )));
    }
    Ok((ParticleState { q: q_new, p: p_new, time: state.time + dt }, pi_new))
}

/// Steady-state diagnostics extracted by [`measure_steady_state`].
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    /// Mean speed over the trailing half of the window.
    pub u_steady: f64,
    /// de Broglie wavelength `lambda_c / (gamma u)` at the steady speed.
    pub lambda_db: f64,
    /// Spread of Compton-period block means, relative to the mean speed.
    pub drift: f64,
}

/// Measure the equilibrated speed from a trajectory window.
///
/// The trailing half of the window is split into Compton-period blocks; block
/// means average out the Compton-scale speed oscillation, their mean is
/// `u_steady`, and their variance is the convergence criterion (relative
/// variance below `1e-4`). The window must span at least 20 Compton periods.
pub fn measure_steady_state(trajectory: &[ParticleState]) -> Result<SteadyState> {
    const MIN_PERIODS: f64 = 20.0;
    const REL_VAR_LIMIT: f64 = 1e-4;

    if trajectory.len() < 8 {
        return Err(Error::NotEquilibrated(format!(
            "window has only {} samples",
            trajectory.len()
        )));
    }
    let span = trajectory.last().unwrap().time - trajectory[0].time;
    if span < MIN_PERIODS * T_C {
        return Err(Error::NotEquilibrated(format!(
            "window spans {:.1} Compton periods, need {MIN_PERIODS}",
            span / T_C
        )));
    }

    let tail = &trajectory[trajectory.len() / 2..];
    let t0 = tail[0].time;

    // Compton-period block means of the speed.
    let mut block_means = Vec::new();
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut block = 0usize;
    for s in tail {
        let this_block = ((s.time - t0) / T_C) as usize;
        if this_block != block && count > 0 {
            block_means.push(acc / count as f64);
            acc = 0.0;
            count = 0;
            block = this_block;
        }
        acc += s.speed();
        count += 1;
    }
    if count > 0 {
        block_means.push(acc / count as f64);
    }
    if block_means.len() < 4 {
        return Err(Error::NotEquilibrated(format!(
            "only {} Compton-period blocks in trailing window",
            block_means.len()
        )));
    }

    let n = block_means.len() as f64;
    let mean = block_means.iter().sum::<f64>() / n;
    let var = block_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::NotEquilibrated("particle at rest".into()));
    }
    let rel_var = var / (mean * mean);
    if rel_var > REL_VAR_LIMIT {
        return Err(Error::NotEquilibrated(format!(
            "trailing speed variance {rel_var:.2e} above {REL_VAR_LIMIT:.0e}"
        )));
    }

    let lo = block_means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = block_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let u = mean;
    let gamma = 1.0 / (1.0 - u * u).sqrt();
    Ok(SteadyState {
        u_steady: u,
        lambda_db: LAMBDA_C / (gamma * u),
        drift: (hi - lo) / mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn force_free_motion_is_straight_and_momentum_exact() {
        let dt = 0.05;
        let p0 = Vec2::new(0.3, 0.0);
        let mut s = ParticleState::new(Vec2::ZERO, p0);
        let gamma = (1.0f64 + 0.09).sqrt();
        for n in 1..=200 {
            s = step_particle(&s, Vec2::ZERO, 16.7, dt).unwrap();
            assert_eq!(s.p, p0, "momentum must be bitwise constant");
            let expect_x = n as f64 * dt * 0.3 / gamma;
            assert!((s.q.x - expect_x).abs() < 1e-12);
            assert_eq!(s.q.y, 0.0);
        }
    }

    #[test]
    fn zero_coupling_is_force_free() {
        let dt = 0.05;
        let p0 = Vec2::new(0.2, 0.1);
        let mut s = ParticleState::new(Vec2::ZERO, p0);
        for _ in 0..100 {
            s = step_particle(&s, Vec2::new(3.0, -2.0), 0.0, dt).unwrap();
            assert_eq!(s.p, p0);
        }
    }

    /// Constant held gradient: the final momentum converges to the fine-step
    /// reference at second order.
    #[test]
    fn held_gradient_second_order_convergence() {
        let g = Vec2::new(0.04, -0.02);
        let b = 16.7;
        let total_t = 2.0;
        let p0 = Vec2::new(0.3, 0.0);

        let integrate = |steps: usize| -> Vec2 {
            let dt = total_t / steps as f64;
            let mut s = ParticleState::new(Vec2::ZERO, p0);
            for _ in 0..steps {
                s = step_particle(&s, g, b, dt).unwrap();
            }
            s.p
        };

        // Reference at 100x the finest step under test.
        let reference = integrate(80 * 100);
        let errs: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| (integrate(n) - reference).norm())
            .collect();
        let slope1 = (errs[0] / errs[1]).log2();
        let slope2 = (errs[1] / errs[2]).log2();
        assert!(
            slope1 > 1.8 && slope1 < 2.2 && slope2 > 1.8 && slope2 < 2.2,
            "convergence slopes {slope1:.2}, {slope2:.2}, errs {errs:?}"
        );
    }

    #[test]
    fn steady_state_of_force_free_particle() {
        let dt = 0.1;
        let p0 = Vec2::new(0.3, 0.0);
        let mut s = ParticleState::new(Vec2::ZERO, p0);
        let mut traj = vec![s];
        while s.time < 25.0 * T_C {
            s = step_particle(&s, Vec2::ZERO, 0.0, dt).unwrap();
            traj.push(s);
        }
        let st = measure_steady_state(&traj).unwrap();
        let expect_u = 0.3 / (1.09f64).sqrt();
        assert!((st.u_steady - expect_u).abs() < 1e-12);
        assert!((st.lambda_db - LAMBDA_C / 0.3).abs() < 1e-9);
        assert!(st.drift < 1e-12);
    }

    #[test]
    fn too_short_window_is_rejected() {
        let dt = 0.1;
        let mut s = ParticleState::new(Vec2::ZERO, Vec2::new(0.3, 0.0));
        let mut traj = vec![s];
        while s.time < 5.0 * T_C {
            s = step_particle(&s, Vec2::ZERO, 0.0, dt).unwrap();
            traj.push(s);
        }
        assert!(matches!(
            measure_steady_state(&traj),
            Err(Error::NotEquilibrated(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        /// The speed bound |u| < 1 holds under arbitrary kick sequences.
        #[test]
        fn speed_stays_subluminal(
            gx in -50.0f64..50.0,
            gy in -50.0f64..50.0,
            px in -5.0f64..5.0,
            steps in 1usize..300,
        ) {
            let mut s = ParticleState::new(Vec2::ZERO, Vec2::new(px, 0.1));
            let g = Vec2::new(gx, gy);
            for _ in 0..steps {
                s = step_particle(&s, g, 25.0, 0.05).unwrap();
                prop_assert!(s.speed() < 1.0);
                prop_assert!(s.gamma() >= 1.0);
            }
        }
    }
}
