use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::control::ControlSet;
use crate::model::measure::EmpiricalMeasure;
use crate::scalar::Real;

/// Diffusion coefficient `(t, x) -> sigma`.
pub type SigmaFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
/// Girsanov drift `(t, x, law, a) -> b`, bounded by the declared constant.
pub type DriftFn<T> = Arc<dyn Fn(T, T, &EmpiricalMeasure<T>, T) -> T + Send + Sync>;
/// Running reward `(t, x, law, a) -> f`.
pub type RunningCostFn<T> = Arc<dyn Fn(T, T, &EmpiricalMeasure<T>, T) -> T + Send + Sync>;
/// Terminal reward `(x_T, terminal state law) -> g`.
pub type TerminalFn<T> = Arc<dyn Fn(T, &EmpiricalMeasure<T>) -> T + Send + Sync>;
/// Terminal state functional `x_T -> phi1`.
pub type Phi1Fn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
/// Terminal law functional `law -> phi2`.
pub type Phi2Fn<T> = Arc<dyn Fn(&EmpiricalMeasure<T>) -> T + Send + Sync>;
/// Explicit Hamiltonian maximiser
/// `(t, x, state law, z, z_m, z_n, interaction) -> control`.
pub type LambdaFn<T> = Arc<dyn Fn(T, T, &EmpiricalMeasure<T>, T, T, T, T) -> T + Send + Sync>;

/// Scalar two-argument function with first and second partials, the
/// nonlinearity applied to the pair of conditional expectations.
#[derive(Clone)]
pub struct GFunction<T> {
    pub value: Arc<dyn Fn(T, T) -> T + Send + Sync>,
    pub dm: Arc<dyn Fn(T, T) -> T + Send + Sync>,
    pub dn: Arc<dyn Fn(T, T) -> T + Send + Sync>,
    pub dmm: Arc<dyn Fn(T, T) -> T + Send + Sync>,
    pub dmn: Arc<dyn Fn(T, T) -> T + Send + Sync>,
    pub dnn: Arc<dyn Fn(T, T) -> T + Send + Sync>,
}

impl<T: Real> GFunction<T> {
    pub fn zero() -> Self {
        Self {
            value: Arc::new(|_, _| T::zero()),
            dm: Arc::new(|_, _| T::zero()),
            dn: Arc::new(|_, _| T::zero()),
            dmm: Arc::new(|_, _| T::zero()),
            dmn: Arc::new(|_, _| T::zero()),
            dnn: Arc::new(|_, _| T::zero()),
        }
    }

    /// `G(m, n) = gamma/2 * m^2`, the mean-variance correction term.
    pub fn half_gamma_m_squared(gamma: T) -> Self {
        let half = crate::scalar::real::<T>(0.5);
        Self {
            value: Arc::new(move |m, _| half * gamma * m * m),
            dm: Arc::new(move |m, _| gamma * m),
            dn: Arc::new(|_, _| T::zero()),
            dmm: Arc::new(move |_, _| gamma),
            dmn: Arc::new(|_, _| T::zero()),
            dnn: Arc::new(|_, _| T::zero()),
        }
    }
}

/// Law of the initial state of each player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw<T> {
    Dirac(T),
    Normal { mean: T, sd: T },
}

/// Declared bounds used as runtime diagnostics. The martingale components
/// of the solved system must stay inside `c_phi1` / `c_phi2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeclaredBounds<T> {
    pub drift: T,
    pub phi1: T,
    pub phi2: T,
    /// Dissipativity constant of `x -> sigma * b`; declared, diagnostic only.
    pub dissipativity: T,
}

/// All coefficients of one game: dynamics, rewards, the nonlinearity `G`,
/// the terminal functionals, the control set and horizon.
#[derive(Clone)]
pub struct GameSpec<T> {
    state_dim: usize,
    noise_dim: usize,
    num_players: usize,
    pub sigma: SigmaFn<T>,
    pub drift_b: DriftFn<T>,
    pub running_f: RunningCostFn<T>,
    pub terminal_g: TerminalFn<T>,
    pub big_g: GFunction<T>,
    pub phi1: Phi1Fn<T>,
    pub phi2: Phi2Fn<T>,
    pub lambda_max: Option<LambdaFn<T>>,
    pub aleph: Option<super::hamiltonian::AlephFn<T>>,
    pub control_set: ControlSet<T>,
    pub horizon: T,
    pub initial: InitialLaw<T>,
    pub bounds: DeclaredBounds<T>,
    drift_law_dependent: bool,
}

impl<T: Real> GameSpec<T> {
    pub fn builder(num_players: usize) -> GameSpecBuilder<T> {
        GameSpecBuilder::new(num_players)
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Whether the drift reads the measure argument. When it does not, the
    /// Hamiltonian maximisation can skip the cross-player drift terms,
    /// which are then constant in the candidate control.
    pub fn drift_law_dependent(&self) -> bool {
        self.drift_law_dependent
    }
}

pub struct GameSpecBuilder<T> {
    num_players: usize,
    sigma: Option<SigmaFn<T>>,
    drift_b: Option<DriftFn<T>>,
    running_f: Option<RunningCostFn<T>>,
    terminal_g: Option<TerminalFn<T>>,
    big_g: Option<GFunction<T>>,
    phi1: Option<Phi1Fn<T>>,
    phi2: Option<Phi2Fn<T>>,
    lambda_max: Option<LambdaFn<T>>,
    aleph: Option<super::hamiltonian::AlephFn<T>>,
    control_set: Option<ControlSet<T>>,
    horizon: Option<T>,
    initial: Option<InitialLaw<T>>,
    bounds: Option<DeclaredBounds<T>>,
    drift_law_dependent: bool,
}

impl<T: Real> GameSpecBuilder<T> {
    fn new(num_players: usize) -> Self {
        Self {
            num_players,
            sigma: None,
            drift_b: None,
            running_f: None,
            terminal_g: None,
            big_g: None,
            phi1: None,
            phi2: None,
            lambda_max: None,
            aleph: None,
            control_set: None,
            horizon: None,
            initial: None,
            bounds: None,
            drift_law_dependent: true,
        }
    }

    pub fn sigma(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.sigma = Some(Arc::new(f));
        self
    }

    pub fn drift(mut self, f: impl Fn(T, T, &EmpiricalMeasure<T>, T) -> T + Send + Sync + 'static) -> Self {
        self.drift_b = Some(Arc::new(f));
        self
    }

    pub fn running(mut self, f: impl Fn(T, T, &EmpiricalMeasure<T>, T) -> T + Send + Sync + 'static) -> Self {
        self.running_f = Some(Arc::new(f));
        self
    }

    pub fn terminal(mut self, f: impl Fn(T, &EmpiricalMeasure<T>) -> T + Send + Sync + 'static) -> Self {
        self.terminal_g = Some(Arc::new(f));
        self
    }

    pub fn big_g(mut self, g: GFunction<T>) -> Self {
        self.big_g = Some(g);
        self
    }

    pub fn phi1(mut self, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.phi1 = Some(Arc::new(f));
        self
    }

    pub fn phi2(mut self, f: impl Fn(&EmpiricalMeasure<T>) -> T + Send + Sync + 'static) -> Self {
        self.phi2 = Some(Arc::new(f));
        self
    }

    pub fn lambda_max(
        mut self,
        f: impl Fn(T, T, &EmpiricalMeasure<T>, T, T, T, T) -> T + Send + Sync + 'static,
    ) -> Self {
        self.lambda_max = Some(Arc::new(f));
        self
    }

    pub fn aleph(mut self, f: super::hamiltonian::AlephFn<T>) -> Self {
        self.aleph = Some(f);
        self
    }

    pub fn control_set(mut self, cs: ControlSet<T>) -> Self {
        self.control_set = Some(cs);
        self
    }

    pub fn horizon(mut self, t: T) -> Self {
        self.horizon = Some(t);
        self
    }

    pub fn initial(mut self, law: InitialLaw<T>) -> Self {
        self.initial = Some(law);
        self
    }

    pub fn bounds(mut self, b: DeclaredBounds<T>) -> Self {
        self.bounds = Some(b);
        self
    }

    pub fn drift_law_dependent(mut self, dep: bool) -> Self {
        self.drift_law_dependent = dep;
        self
    }

    pub fn build(self) -> Result<GameSpec<T>> {
        if self.num_players == 0 {
            return Err(Error::InvalidSpec("num_players must be >= 1".into()));
        }
        let horizon = self
            .horizon
            .ok_or_else(|| Error::InvalidSpec("horizon is required".into()))?;
        if !(horizon > T::zero()) {
            return Err(Error::InvalidSpec("horizon must be positive".into()));
        }
        let control_set = self
            .control_set
            .ok_or_else(|| Error::InvalidSpec("control set is required".into()))?;
        let sigma = self
            .sigma
            .ok_or_else(|| Error::InvalidSpec("sigma is required".into()))?;
        let bounds = self.bounds.unwrap_or(DeclaredBounds {
            drift: crate::scalar::real(1e3),
            phi1: crate::scalar::real(1e3),
            phi2: crate::scalar::real(1e3),
            dissipativity: T::zero(),
        });
        if let Some(InitialLaw::Normal { sd, .. }) = self.initial {
            if sd < T::zero() {
                return Err(Error::InvalidSpec("initial sd must be nonnegative".into()));
            }
        }
        Ok(GameSpec {
            // The solvers are written for scalar state and noise; the
            // dimensions are kept as explicit fields of the model.
            state_dim: 1,
            noise_dim: 1,
            num_players: self.num_players,
            sigma,
            drift_b: self
                .drift_b
                .unwrap_or_else(|| Arc::new(|_, _, _: &EmpiricalMeasure<T>, _| T::zero())),
            running_f: self
                .running_f
                .unwrap_or_else(|| Arc::new(|_, _, _: &EmpiricalMeasure<T>, _| T::zero())),
            terminal_g: self
                .terminal_g
                .unwrap_or_else(|| Arc::new(|_, _: &EmpiricalMeasure<T>| T::zero())),
            big_g: self.big_g.unwrap_or_else(GFunction::zero),
            phi1: self.phi1.unwrap_or_else(|| Arc::new(|_| T::zero())),
            phi2: self
                .phi2
                .unwrap_or_else(|| Arc::new(|_: &EmpiricalMeasure<T>| T::zero())),
            lambda_max: self.lambda_max,
            aleph: self.aleph,
            control_set,
            horizon,
            initial: self.initial.unwrap_or(InitialLaw::Dirac(T::zero())),
            bounds,
            drift_law_dependent: self.drift_law_dependent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_rejects_missing_pieces() {
        let r = GameSpec::<f64>::builder(2).build();
        assert!(r.is_err());
        let r = GameSpec::<f64>::builder(0)
            .sigma(|_, _| 1.0)
            .horizon(1.0)
            .control_set(ControlSet::symmetric(2.0, 5).unwrap())
            .build();
        assert!(r.is_err());
    }

    #[test]
    fn defaults_fill_zero_coefficients() {
        let spec = GameSpec::<f64>::builder(2)
            .sigma(|_, _| 1.0)
            .horizon(1.0)
            .control_set(ControlSet::symmetric(2.0, 5).unwrap())
            .build()
            .unwrap();
        let law = EmpiricalMeasure::from_states(&[0.0]).unwrap();
        assert_eq!((spec.running_f)(0.0, 0.0, &law, 0.5), 0.0);
        assert_eq!((spec.terminal_g)(1.0, &law), 0.0);
        assert_eq!((spec.phi1)(1.0), 0.0);
        assert_eq!(spec.state_dim(), 1);
        assert_eq!(spec.noise_dim(), 1);
    }
}
