pub mod fsutil;
