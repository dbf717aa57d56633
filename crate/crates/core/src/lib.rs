pub mod analysis;
pub mod cascade;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod oracle;
pub mod tridiag;
