//! Markdown reference generated from the clap definitions.

use std::fmt::Write as _;

use clap::Command;

pub fn markdown(cmd: &mut Command) -> String {
    cmd.build();
    let mut out = String::new();
    let name = cmd.get_name().to_string();
    let _ = writeln!(out, "# Command reference\n");
    let _ = writeln!(out, "Generated by `{name} gen-docs`; do not edit by hand.\n");
    section(&mut out, &name, cmd);
    for sub in cmd.get_subcommands_mut() {
        if sub.get_name() == "help" {
            continue;
        }
        let title = format!("{name} {}", sub.get_name());
        section(&mut out, &title, sub);
    }
    out
}

fn section(out: &mut String, title: &str, cmd: &mut Command) {
    let help = cmd.render_long_help().to_string();
    let _ = writeln!(out, "## `{title}`\n\n```text\n{}\n```\n", help.trim_end());
}
