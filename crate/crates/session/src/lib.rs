//! Human Futures Wheel sessions: an event-sourced model, directory storage
//! and the HTTP API used by the browser client.

pub mod api;
mod error;
mod model;
mod service;
mod store;

pub use api::{router, ApiError, API_VERSION, API_VERSION_HEADER};
pub use error::SessionError;
pub use model::{Condition, Event, EventKind, Node, SessionDocument, Status, WheelSession, DOCUMENT_VERSION, HUB};
pub use service::{SessionService, SessionSettings};
pub use store::{SessionHandle, SessionStore};
