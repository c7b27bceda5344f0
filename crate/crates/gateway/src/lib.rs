//! Provider-agnostic chat and embedding access.
//!
//! Every call is stateless: a [`ChatRequest`] carries the full system and user
//! text, and nothing is remembered between calls. Two backends ship: an
//! OpenAI-compatible HTTP client and a scripted mock for offline runs.

mod client;
mod config;
mod error;
mod mock;
mod remote;
mod request;

pub use client::{Backend, Gateway, SchemaReply};
pub use config::{BackendConfig, BackendKind, ModelRoles, Role, Temperatures, CONFIG_VERSION};
pub use error::{GatewayError, RawAttempt};
pub use mock::{bag_of_characters, FailureKind, FailureSpec, MockBackend, MockEntry, MockKey, MockScript, RecordedCall};
pub use remote::RemoteBackend;
pub use request::{CallContext, ChatRequest, ChatResponse, EmbedResponse, Stage};
