//! The base stack machine.
//!
//! Every executed instruction costs one step. Popping an empty stack yields
//! 0 and `DUP` on an empty stack pushes 0. `READ` pushes the next input bit
//! and halts the machine when the input is used up.

use crate::codec::{BitStr, Op};

use super::Exec;

pub(crate) fn run(
    ops: &[Op],
    input: &BitStr,
    fuel: u64,
    mut trace: Option<&mut Vec<String>>,
) -> Exec {
    let mut pc = 0usize;
    let mut steps = 0u64;
    let mut stack: Vec<bool> = Vec::new();
    let mut out = BitStr::new();
    let mut read_pos = 0usize;
    loop {
        if steps >= fuel {
            return Exec::Exhausted;
        }
        steps += 1;
        let op = ops[pc];
        if let Some(t) = trace.as_deref_mut() {
            t.push(format!("{steps}\t{op}\t{}", stack.len()));
        }
        match op {
            Op::Halt => return Exec::Halted { output: out, steps },
            Op::Push0 => stack.push(false),
            Op::Push1 => stack.push(true),
            Op::Dup => {
                let top = stack.last().copied().unwrap_or(false);
                stack.push(top);
            }
            Op::Drop => {
                stack.pop();
            }
            Op::Out => out.push(stack.pop().unwrap_or(false)),
            Op::Read => {
                if read_pos == input.len() {
                    return Exec::Halted { output: out, steps };
                }
                stack.push(input.get(read_pos));
                read_pos += 1;
            }
            Op::Jnz(d) => {
                if stack.pop().unwrap_or(false) {
                    pc -= d as usize;
                    continue;
                }
            }
        }
        pc += 1;
    }
}
