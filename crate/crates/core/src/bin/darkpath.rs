// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(darkpath::cli::run(std::env::args_os()));
}
