pub mod ble;
pub mod cli;
pub mod har;
pub mod identity;
pub mod mac;
pub mod pipeline;
pub mod report;
pub mod rf;
pub mod sim;
pub mod time;
pub mod traffic;
pub mod wire;

pub use mac::MacAddress;
