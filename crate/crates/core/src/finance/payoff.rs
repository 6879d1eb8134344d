use crate::catalog::unknown;
use crate::error::{Error, Result};

/// Windows spanning at most this many cells are integrated directly.
const LOCAL_CELLS: usize = 64;

pub const WEIGHT_FUNCTIONS: [&str; 3] = ["one", "ramp", "exp"];

/// Weight `a(theta)` on the look-back window `theta in [-T, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFn {
    /// `a = 1`.
    One,
    /// `a = (theta + T) / T`, rising from 0 to 1.
    Ramp,
    /// `a = exp(theta)`.
    Exp,
}

impl WeightFn {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "one" => Ok(Self::One),
            "ramp" => Ok(Self::Ramp),
            "exp" => Ok(Self::Exp),
            other => Err(unknown("weight function", other, &WEIGHT_FUNCTIONS)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::One => "one",
            Self::Ramp => "ramp",
            Self::Exp => "exp",
        }
    }

    #[inline]
    pub fn eval(&self, theta: f64, horizon: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Ramp => (theta + horizon) / horizon,
            Self::Exp => theta.exp(),
        }
    }
}

/// Window average `eta^delta(theta) = |W|^-1 int_W a(xi) eta(xi) dxi` over
/// `W = [max(theta - delta, -T), theta]`, computed on the piecewise-linear
/// interpolant of `a eta` through the path nodes.
///
/// Nodes sit at `theta_k = -T + k h`. Normalizing by the clamped window
/// length keeps constants fixed; at `theta = -T` the value is `a eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub weight: WeightFn,
    pub delta: f64,
}

impl Mollifier {
    pub fn new(weight: WeightFn, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("mollification width {delta} must be positive")));
        }
        Ok(Self { weight, delta })
    }

    /// `eta^delta` at every node of `path` (node spacing `h`).
    pub fn window_averages(&self, path: &[f64], h: f64) -> Vec<f64> {
        let n = path.len();
        let horizon = h * (n - 1) as f64;
        let g: Vec<f64> = path.iter().enumerate().map(|(k, v)| self.weight.eval(-horizon + k as f64 * h, horizon) * v).collect();
        let mut prefix = vec![0.0; n];
        for k in 1..n {
            prefix[k] = prefix[k - 1] + 0.5 * h * (g[k - 1] + g[k]);
        }
        // Integral of the interpolant from node 0 to offset u (in time units from -T).
        let integral_to = |u: f64| -> f64 {
            let pos = u / h;
            let i = (pos.floor() as usize).min(n - 1);
            let frac = pos - i as f64;
            if frac <= 0.0 || i == n - 1 {
                return prefix[i];
            }
            let gu = g[i] + frac * (g[i + 1] - g[i]);
            prefix[i] + 0.5 * frac * h * (g[i] + gu)
        };
        (0..n)
            .map(|j| {
                let end = j as f64 * h;
                let start = (end - self.delta).max(0.0);
                let width = end - start;
                if width <= 0.0 {
                    return g[j];
                }
                let lower = if end - self.delta <= 0.0 { 0.0 } else { integral_to(start) };
                if j - (start / h).floor() as usize > LOCAL_CELLS {
                    return (prefix[j] - lower) / width;
                }
                // Short windows: differencing prefix sums would amplify rounding by 1/width.
                let i0 = ((start / h).floor() as usize).min(j);
                let mut acc = 0.0;
                let mut a = start;
                let mut ga = g[i0] + (start / h - i0 as f64) * (g[(i0 + 1).min(n - 1)] - g[i0]);
                for (k, &gk) in g.iter().enumerate().take(j + 1).skip(i0 + 1) {
                    let b = k as f64 * h;
                    if b > a {
                        acc += 0.5 * (b - a) * (ga + gk);
                    }
                    a = b;
                    ga = gk;
                }
                acc / width
            })
            .collect()
    }

    /// `sup_theta eta^delta(theta)` over the path nodes.
    pub fn sup(&self, path: &[f64], h: f64) -> f64 {
        self.window_averages(path, h).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bounded payoffs that are not calls on a price statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CustomPayoff {
    Constant(f64),
    /// `amount` if `S_T > strike`.
    Digital { strike: f64, amount: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptionKind {
    European,
    /// Call on the trapezoidal time average of the price.
    Asian,
    /// Call on `sup eta^delta`; `delta` defaults to four grid steps.
    Lookback { weight: WeightFn, delta: Option<f64> },
    Custom(CustomPayoff),
}

pub const OPTION_KINDS: [&str; 4] = ["european", "asian", "lookback", "custom-bounded"];

/// A capped option priced at valuation time 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub cap: Option<f64>,
    pub maturity: f64,
}

impl OptionSpec {
    pub fn european(strike: f64, cap: f64, maturity: f64) -> Self {
        Self { kind: OptionKind::European, strike, cap: Some(cap), maturity }
    }

    pub fn validate(&self) -> Result<f64> {
        let cap = self.cap.ok_or(Error::UnboundedPayoff)?;
        if !(cap >= 0.0) || !cap.is_finite() {
            return Err(Error::InvalidParameter(format!("cap {cap} must be finite and non-negative")));
        }
        if !(self.maturity > 0.0) {
            return Err(Error::InvalidParameter(format!("maturity {} must be positive", self.maturity)));
        }
        if !self.strike.is_finite() {
            return Err(Error::InvalidParameter("strike must be finite".into()));
        }
        match self.kind {
            OptionKind::Lookback { delta: Some(d), .. } if !(d > 0.0) => {
                Err(Error::InvalidParameter(format!("lookback delta {d} must be positive")))
            }
            OptionKind::Custom(CustomPayoff::Constant(c)) if c.abs() > cap => {
                Err(Error::InvalidParameter(format!("constant payoff {c} exceeds the cap {cap}")))
            }
            OptionKind::Custom(CustomPayoff::Digital { amount, .. }) if amount.abs() > cap => {
                Err(Error::InvalidParameter(format!("digital amount {amount} exceeds the cap {cap}")))
            }
            _ => Ok(cap),
        }
    }

    /// Payoff on price nodes `prices[0..=n]` spaced `h` apart.
    pub fn payoff(&self, prices: &[f64], h: f64) -> Result<f64> {
        let cap = self.validate()?;
        let call = |v: f64| (v - self.strike).max(0.0).min(cap);
        let n = prices.len() - 1;
        Ok(match self.kind {
            OptionKind::European => call(prices[n]),
            OptionKind::Asian => {
                let inner: f64 = prices[1..n].iter().sum();
                let avg = (0.5 * (prices[0] + prices[n]) + inner) / n as f64;
                call(avg)
            }
            OptionKind::Lookback { weight, delta } => {
                let m = Mollifier::new(weight, delta.unwrap_or(4.0 * h))?;
                call(m.sup(prices, h))
            }
            OptionKind::Custom(CustomPayoff::Constant(c)) => c,
            OptionKind::Custom(CustomPayoff::Digital { strike, amount }) => {
                if prices[n] > strike {
                    amount
                } else {
                    0.0
                }
            }
        })
    }
}
