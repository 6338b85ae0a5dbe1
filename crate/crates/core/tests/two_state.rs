use approx::assert_abs_diff_eq;
use riskmdp_core::dp::{self, DpConfig};
use riskmdp_core::game;
use riskmdp_core::model::two_state_example;
use riskmdp_core::oracle;
use riskmdp_core::StationaryPolicy;

const RHOS: [f64; 4] = [0.5, 0.8, 0.135_335_283_236_612_7, 0.95];

#[test]
fn closed_form_matches_power_iteration() {
    for rho in RHOS {
        let ex = dp::analytic_example(rho).unwrap();
        let m = two_state_example(rho).unwrap();
        let rates = oracle::growth_rate(&m, &StationaryPolicy::uniform(2, 1)).unwrap();
        assert_abs_diff_eq!(ex.lambda_bar, rates.lambda_max, epsilon = 1e-6);
        assert_abs_diff_eq!(ex.phi_star[1], rates.lambda[1], epsilon = 1e-6);
    }
}

#[test]
fn lp_solutions_certify() {
    for rho in RHOS {
        let m = two_state_example(rho).unwrap();
        let sol = game::solve_game(&m, 8).unwrap();
        let cert = dp::certify(&m, &sol.value, &sol.potentials, &DpConfig::default()).unwrap();
        // Below 1/e the optimal row is interior and only hit to grid accuracy.
        assert!(cert.max_residual() <= 1e-5, "rho {rho}: {:?}", cert.residuals);
        assert!(cert.twisted.max() <= 1e-5, "rho {rho}: {:?}", cert.twisted);

        for i in 0..2 {
            let mut phi = sol.value.clone();
            phi[i] += 0.1;
            let bumped = dp::certify(&m, &phi, &sol.potentials, &DpConfig::default());
            assert!(bumped.is_err() || bumped.unwrap().max_residual() >= 0.09);
        }
    }
}

#[test]
fn supercritical_potentials_are_free() {
    let m = two_state_example(0.8).unwrap();
    let phi = [0.0, 1.0 + 0.8f64.ln()];
    for v in [[0.0, 0.0], [3.0, -1.0], [-2.5, 7.0]] {
        let r = dp::check_dp(&m, &phi, &v, 1e-6).unwrap();
        assert!(r.max() <= 1e-9);
    }
}
