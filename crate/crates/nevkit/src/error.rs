use crate::C;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rational denominator is identically zero")]
    ZeroDenominator,

    #[error("ExpOf inner function has poles; only entire inner functions are allowed")]
    ExpOfNotEntire,

    #[error("IntPow exponent must be nonzero")]
    ZeroExponent,

    #[error("Tan scale must be nonzero")]
    ZeroTanScale,

    #[error("root finder did not converge on polynomial {coeffs:?} (residual {residual:.3e})")]
    RootFinding { coeffs: Vec<C>, residual: f64 },

    #[error("quadrature did not converge: last two estimates {prev:.12e}, {last:.12e}")]
    QuadratureNonConvergence { prev: f64, last: f64 },

    #[error("function text parse error at byte {pos}: {msg}")]
    FunctionParse { pos: usize, msg: String },

    #[error("difference polynomial parse error at byte {pos}: {msg}")]
    PolyParse { pos: usize, msg: String },

    #[error("parameter out of range: {0}")]
    ParameterDomain(String),

    #[error("evaluation point on divisor: {0}")]
    PointOnDivisor(String),

    #[error("T(r+|c|, f) = {0} is below e; Borel alpha undefined")]
    CharacteristicBelowE(f64),

    #[error("degree of Q ({deg_q}) exceeds n ({n}); Clunie hypothesis violated")]
    DegreeHypothesis { deg_q: usize, n: usize },

    #[error("equation residual {residual:.3e} at r = {r} exceeds tolerance; f is not a solution")]
    EquationResidual { r: f64, residual: f64 },

    #[error("target satisfies equation: P(z, a) vanishes at all sampled points")]
    TargetSatisfiesEquation,

    #[error("target is not slowly moving: T(r,a) = {t_a:.6e} vs T(r,f) = {t_f:.6e} at r = {r}")]
    NotSlowlyMoving { r: f64, t_a: f64, t_f: f64 },

    #[error("difference polynomial has a shifted factor; identity applies to zero shifts only")]
    ShiftedFactor,

    #[error("too few records: need at least {need}, got {got}")]
    TooFewRecords { need: usize, got: usize },

    #[error("least-squares fit degenerate: {0}")]
    FitDegenerate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
