//! Event stream ingestion: parsing, artefact filters, ROI cropping and the
//! annotation/detection file formats.

mod annotations;
mod csv;
mod filters;
mod stream;

pub use annotations::{
    parse_annotations, parse_detections, write_annotations, write_detections, write_proposals, AnnotationSet,
    BoundingBox, Instance,
};
pub use csv::{parse_event_csv, write_event_csv, SensorDims, EVENT_CSV_HEADER};
pub use filters::{crop_to_roi, hot_pixel_filter, ir_flash_filter, FlashFilterConfig};
pub use stream::{Event, EventStream};
