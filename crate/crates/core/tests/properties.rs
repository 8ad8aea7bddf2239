use fcev_core::density::price_call_quadrature;
use fcev_core::impliedvol::{bs_price, implied_vol};
use fcev_core::pde::{price_pde, PdeGrid};
use fcev_core::pricer::{price_call_series, price_put};
use fcev_core::specfun::{lower_gamma_p, upper_gamma_q, SpecFunConfig};
use fcev_core::{ContractSpec, KernelConfig, ModelParams, OptionKind, SeriesConfig};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = (ModelParams, ContractSpec)> {
    (
        0.1f64..0.6,
        0.2f64..1.8,
        0.5f64..0.95,
        0.0f64..0.08,
        0.0f64..0.04,
        0.7f64..1.3,
        0.25f64..2.0,
    )
        .prop_map(|(vol, beta, hurst, r, delta, moneyness, maturity)| {
            let x0: f64 = 100.0;
            // keep the local volatility at the spot near `vol`
            let sigma = vol * x0.powf(1.0 - beta / 2.0);
            (
                ModelParams {
                    sigma,
                    beta,
                    hurst,
                    mu: r,
                    r,
                    delta,
                    x0,
                },
                ContractSpec {
                    strike: x0 * moneyness,
                    t0: 0.0,
                    maturity,
                    kind: OptionKind::Call,
                },
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn call_within_no_arbitrage_bounds((p, c) in model()) {
        let res = price_call_series(&p, &c, &KernelConfig::default(), &SeriesConfig::default()).unwrap();
        let tau = c.tau();
        let fwd = (-p.delta * tau).exp() * p.x0;
        let lower = (fwd - c.strike * (-p.r * tau).exp()).max(0.0);
        prop_assert!(res.price >= lower - 1e-9, "{} < {lower}", res.price);
        prop_assert!(res.price <= fwd + 1e-9);
    }

    #[test]
    fn call_decreasing_and_convex_in_strike((p, c) in model()) {
        let k = KernelConfig::default();
        let s = SeriesConfig::default();
        let h = 0.5;
        let price = |strike: f64| price_call_series(&p, &c.with_strike(strike), &k, &s).unwrap().price;
        let (lo, mid, hi) = (price(c.strike - h), price(c.strike), price(c.strike + h));
        prop_assert!(hi <= mid + 1e-10 && mid <= lo + 1e-10);
        prop_assert!(lo - 2.0 * mid + hi >= -1e-9);
    }

    #[test]
    fn series_agrees_with_density_quadrature((p, c) in model()) {
        let k = KernelConfig::default();
        let series = price_call_series(&p, &c, &k, &SeriesConfig::default()).unwrap().price;
        let quad = price_call_quadrature(&p, &c, &k, 1e-10).unwrap().price;
        prop_assert!((series - quad).abs() <= 1e-7 * series.max(1e-3), "{series} {quad}");
    }

    #[test]
    fn parity_put_matches_pde_put((p, c) in model()) {
        let k = KernelConfig::default();
        let put = c.with_kind(OptionKind::Put);
        let series = price_put(&p, &put, &k, &SeriesConfig::default()).unwrap().price;
        let pde = price_pde(&p, &put, &PdeGrid { skip_richardson: true, ..PdeGrid::default() }, &k)
            .unwrap()
            .price;
        prop_assert!((series - pde).abs() <= 5e-3 * series.max(1e-2), "{series} {pde}");
    }

    #[test]
    fn incomplete_gammas_are_complementary(a in 0.01f64..300.0, ratio in 0.05f64..3.0) {
        let cfg = SpecFunConfig::default();
        let x = a * ratio;
        let lower = lower_gamma_p(a, x, &cfg).unwrap();
        let upper = upper_gamma_q(a, x, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&lower) && (0.0..=1.0).contains(&upper));
        prop_assert!((lower + upper - 1.0).abs() < 1e-12, "{lower} + {upper}");
    }

    #[test]
    fn implied_vol_inverts_black_scholes(
        vol in 0.05f64..1.0,
        moneyness in 0.8f64..1.25,
        tau in 0.1f64..3.0,
        put in any::<bool>(),
    ) {
        let kind = if put { OptionKind::Put } else { OptionKind::Call };
        let strike = 100.0 * moneyness;
        let price = bs_price(100.0, strike, 0.03, 0.01, vol, tau, kind);
        let back = implied_vol(price, 100.0, strike, 0.03, 0.01, tau, kind).unwrap();
        prop_assert!((back - vol).abs() < 1e-8, "{back} vs {vol}");
    }
}
