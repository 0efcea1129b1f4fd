//! Network side of a shadowstage show: OSC frame streaming and triggers over
//! UDP, and a JSON-lines control channel over TCP that also accepts
//! web-socket upgrades from browsers.

pub mod control;
pub mod live;
pub mod osc;

pub use control::{parse_control, parse_request, ControlError, ErrorCode, Request};
pub use live::{start, LiveError, LiveHandle, LiveOptions};
pub use osc::{decode_osc, encode_osc, frame_to_messages, OscArg, OscError, OscMessage};
