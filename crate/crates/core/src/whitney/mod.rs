//! Christ and Christ–Whitney decompositions of finite metric samples, Whitney
//! balls, enlarged cubes and per-cube charts.

mod chart;
mod christ;
mod decomposition;
mod sample;
mod balls;

pub use chart::{chart_constants, chart_points, chart_summary, cube_chart, select_a, ChartConstants, ChartReport, ChartSummary, A_CAP};
pub use christ::{christ_decompose, christ_decompose_on, ChristCube, ChristData, ChristHierarchy, ChristReport};
pub use decomposition::{
    enlarge_cubes, whitney_decompose, Boundary, CubeSystem, Enlargement, Node, WhitneyCube, WhitneyData, WhitneyReport,
};
pub use sample::{triangle_defect, MetricSample};
pub use balls::{relative_distance, verify_whitney_balls, whitney_ball, DiameterViolation, WhitneyBallReport, WhitneyBall, DEFAULT_EPS};
