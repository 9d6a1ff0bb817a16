pub mod bounds;
pub mod distance;
pub mod kernel;
pub mod oracle;
pub mod verify;
