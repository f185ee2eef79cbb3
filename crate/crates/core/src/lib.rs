// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Least-action design of quasi-adiabatic state-transfer pulses in
//! dissipative systems, with master-equation verification.

pub mod action;
pub mod adiabatic;
pub mod bench;
pub mod cli;
pub mod config;
pub mod lambda;
pub mod master;
pub mod nelder_mead;
pub mod ode;
pub mod operator;
pub mod path;
pub mod quadrature;
