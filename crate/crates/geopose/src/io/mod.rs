//! Canonical file formats: JSON scenes, binary dense-map tensors, reports.

pub mod report;
pub mod scene;
pub mod tensor;

pub use report::{
    EvalDocument, RegimeReport, ReportFormat, ReportIoError, render_report_csv, render_report_text,
    write_report,
};
pub use scene::{SceneIoError, parse_scene, read_scene, render_scene_json, write_scene};
pub use tensor::{
    TensorIoError, dense_maps_from_bytes, dense_maps_to_bytes, read_dense_maps, write_dense_maps,
};
