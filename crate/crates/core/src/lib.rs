pub mod bits;
pub mod classify;
pub mod collineation;
pub mod gf;
pub mod permgrp;
pub mod pg3;
pub mod rank;
pub mod search;
pub mod spreadset;
