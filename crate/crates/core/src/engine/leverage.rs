use super::{EngineError, HullWhiteParams, LeverageMode, LeverageSurface, McConfig, ModelSpec, Simulator};
use crate::black::black;
use crate::market_data::{GridSpec, LocalVolGrid, MarketSnapshot};

pub const MAX_SWEEPS: usize = 5;
/// Fewest paths around a node for its own estimate; sparser nodes are merged
/// into the nearest populated node toward the centre.
pub const MIN_BIN_PATHS: u32 = 50;
const TOLERANCE: f64 = 1e-4;
const DENSITY_BUMP: f64 = 0.005;

/// Calibrates the hybrid leverage so the model reprices the vanilla surface.
///
/// With stochastic rates the Dupire variance splits as
///
/// `σ_dup²(T,K) = L²(T,K) + 2·E[D_T (r_T − f(0,T)) 1{S_T > K}] / (K ∂²C/∂K²)`
///
/// The expectation is estimated by binning simulated paths in (time,
/// log-moneyness) cells, the curvature of call prices comes from the input
/// surface, and the leverage is updated as `σ_dup / sqrt(factor)` with
/// `factor = σ_dup² / L²`. Simulation and update repeat for at most
/// [`MAX_SWEEPS`] sweeps under the config's seed.
pub fn calibrate_leverage(
    market: &MarketSnapshot,
    hw: &HullWhiteParams,
    correlation: f64,
    config: &McConfig,
    horizon: f64,
) -> Result<LeverageSurface, EngineError> {
    hw.validate()?;
    config.validate()?;
    let spec = GridSpec::default();
    let dupire = LocalVolGrid::dupire(market, horizon, spec);
    if hw.rate_vol == 0.0 {
        return Ok(LeverageSurface {
            grid: dupire,
            mode: LeverageMode::Recalibrate,
            sweeps: 0,
            converged: true,
            warnings: Vec::new(),
        });
    }

    let times = dupire.times();
    let ys = dupire.log_moneyness();
    let (n_t, n_y) = (times.len(), ys.len());
    let n_cells = n_y + 1;

    // K·∂²C/∂K² from the market surface.
    let density: Vec<f64> = times
        .iter()
        .flat_map(|&t| {
            let fwd = market.forward(t);
            let df = market.discount.df(t);
            let call = move |k: f64| df * black(fwd, k, market.surface.vol(t, k / fwd), t, true);
            ys.iter().map(move |&y| {
                let k = fwd * y.exp();
                let h = DENSITY_BUMP * k;
                k * (call(k + h) - 2.0 * call(k) + call(k - h)) / (h * h)
            })
        })
        .collect();

    let spy = config.steps_per_year as f64;
    let pillar_steps: Vec<usize> = times.iter().map(|t| (t * spy).round() as usize).collect();
    let y_min = ys[0];
    let y_step = ys[1] - ys[0];

    let mut current = dupire.clone();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let model = ModelSpec::hwlv(*hw, correlation).with_leverage(LeverageSurface {
            grid: current.clone(),
            mode: LeverageMode::Recalibrate,
            sweeps,
            converged: false,
            warnings: Vec::new(),
        });
        let sim = Simulator::new(&model, market, horizon, *config)?;
        let chunks = sim.fold_paths(
            || (vec![0u32; n_t * n_cells], vec![0.0f64; n_t * n_cells]),
            |(counts, sums), _, path| {
                for (i, &s) in pillar_steps.iter().enumerate() {
                    let s = s.min(path.n_steps());
                    let y = path.spot[s].ln() - sim.ln_forward(s);
                    let pos = ((y - y_min) / y_step).floor() + 1.0;
                    let cell = pos.clamp(0.0, n_y as f64) as usize;
                    let f0 = market.discount.instantaneous_forward(path.times[s]);
                    counts[i * n_cells + cell] += 1;
                    sums[i * n_cells + cell] += path.discount[s] * (path.short_rate(s) - f0);
                }
            },
        );
        let mut counts = vec![0u32; n_t * n_cells];
        let mut sums = vec![0.0f64; n_t * n_cells];
        for (c, s) in chunks {
            for k in 0..counts.len() {
                counts[k] += c[k];
                sums[k] += s[k];
            }
        }

        let n_paths = config.n_paths as f64;
        let mut factors = vec![1.0; n_t * n_y];
        for i in 0..n_t {
            let row_counts = &counts[i * n_cells..(i + 1) * n_cells];
            let row_sums = &sums[i * n_cells..(i + 1) * n_cells];
            let mut tail = 0.0;
            let mut above = vec![0.0; n_y];
            for j in (0..n_y).rev() {
                tail += row_sums[j + 1];
                above[j] = tail / n_paths;
            }
            let populated: Vec<Option<f64>> = (0..n_y)
                .map(|j| {
                    let dens = density[i * n_y + j];
                    if row_counts[j] + row_counts[j + 1] < MIN_BIN_PATHS || !(dens > 1e-10) {
                        return None;
                    }
                    let dup2 = dupire.value(i, j).powi(2);
                    let lev2 = (dup2 - 2.0 * above[j] / dens)
                        .clamp(LeverageSurface::MIN.powi(2), LeverageSurface::MAX.powi(2));
                    Some(dup2 / lev2)
                })
                .collect();
            merge_outward(&populated, &mut factors[i * n_y..(i + 1) * n_y]);
        }

        let next = dupire.map_values(|i, j, v| {
            (v / factors[i * n_y + j].sqrt()).clamp(LeverageSurface::MIN, LeverageSurface::MAX)
        });
        let change = next
            .values()
            .iter()
            .zip(current.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = next;
        if change < TOLERANCE {
            converged = true;
            break;
        }
    }

    let warnings = if converged {
        Vec::new()
    } else {
        vec![format!(
            "leverage calibration did not converge to {TOLERANCE} within {MAX_SWEEPS} sweeps (rho = {correlation})"
        )]
    };
    Ok(LeverageSurface {
        grid: current,
        mode: LeverageMode::Recalibrate,
        sweeps,
        converged,
        warnings,
    })
}

/// Fills unpopulated nodes with the factor of the nearest populated node,
/// preferring the one toward the centre of the row.
fn merge_outward(populated: &[Option<f64>], out: &mut [f64]) {
    let idx: Vec<usize> = (0..populated.len()).filter(|&j| populated[j].is_some()).collect();
    if idx.is_empty() {
        out.fill(1.0);
        return;
    }
    let centre = (idx[0] + idx[idx.len() - 1]) / 2;
    for j in 0..populated.len() {
        out[j] = match populated[j] {
            Some(f) => f,
            None => {
                let pick = if j <= centre {
                    idx.iter().copied().find(|&k| k > j)
                } else {
                    idx.iter().rev().copied().find(|&k| k < j)
                };
                let k = pick.unwrap_or_else(|| *idx.iter().min_by_key(|&&k| k.abs_diff(j)).unwrap());
                populated[k].unwrap()
            }
        };
    }
}
