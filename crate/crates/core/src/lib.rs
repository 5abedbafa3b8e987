pub mod error;
pub mod jet;
pub mod kernel;
pub mod lax;
pub mod linearization;
pub mod par;
pub mod problem;
pub mod recursion;
pub mod run;
pub mod symbol;

pub use error::{Error, Result};
pub use kernel::{Expr, Poly, Q};
pub use symbol::{JetVar, MultiIndex, Symbol, SymbolKind, Unknown, Var};
