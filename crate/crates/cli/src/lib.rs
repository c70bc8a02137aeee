//! Driver crate: the tower document format, chart rendering, example
//! generators, and the command implementations behind the `opsseq` binary.

pub mod chart;
pub mod cmd;
pub mod doc;
pub mod gen;

pub use chart::{ChartDocument, ChartGrading};
pub use cmd::{cmd_chart, cmd_converge, cmd_gen, cmd_pages, cmd_verify, CmdError, PageRouteFlag};
pub use doc::{parse, parse_file, DocError, PropDoc, RingCase, SideDoc, TowerCase, TowerDocument};
