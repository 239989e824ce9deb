use crate::checks::all_checks;
use crate::report::Report;

use super::{Context, ModeError};

pub fn run(ctx: &mut Context<'_>, report: &mut Report) -> Result<(), ModeError> {
    for (criterion, _, check) in all_checks() {
        for mut e in check(ctx.config.seed)? {
            e.config.insert("criterion".into(), criterion.into());
            report.push(e.test, e.statistic, e.p_value, e.pass, e.n, e.config);
        }
    }
    Ok(())
}
