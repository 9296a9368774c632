//! IO-example generators. Every output is computed from what the task
//! means (invert a string, add two numbers, ...), never by running a
//! program through the model, so generated examples are an independent
//! check on both the models and the solvers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Task, ZooError};

/// Generator ids known to the registry.
pub const GENERATORS: &[&str] = &[
    "automaton-or",
    "parity-chain",
    "tm-invert",
    "tm-prepend-zero",
    "tm-binary-decrement",
    "circuit-controlled-shift",
    "circuit-full-adder",
    "circuit-2-bit-adder",
    "heap-access",
    "heap-decrement",
    "heap-list-k",
];

const BLANK: u32 = 2;

/// Declaration name → flattened row-major values.
pub(super) struct NamedExample {
    pub inputs: Vec<(&'static str, Vec<u32>)>,
    pub outputs: Vec<(&'static str, Vec<u32>)>,
}

struct Ctx<'a> {
    task: &'a Task,
    rng: ChaCha8Rng,
}

impl Ctx<'_> {
    fn err(&self, message: impl Into<String>) -> ZooError {
        ZooError::Generator { generator: self.task.spec.generator.clone(), message: message.into() }
    }

    fn constant(&self, name: &str) -> Result<u32, ZooError> {
        let v = self.task.constant(name).ok_or_else(|| self.err(format!("model has no constant {name}")))?;
        u32::try_from(v).map_err(|_| self.err(format!("constant {name} = {v} is negative")))
    }

    fn arg(&self, name: &str, default: u32) -> u32 {
        self.task.spec.args.get(name).map_or(default, |&v| v.max(0) as u32)
    }
}

pub(super) fn run(task: &Task, seed: u64) -> Result<Vec<NamedExample>, ZooError> {
    let mut cx = Ctx { task, rng: ChaCha8Rng::seed_from_u64(seed) };
    let n = task.spec.examples;
    let generate: fn(&mut Ctx, usize) -> Result<Vec<NamedExample>, ZooError> = match task.spec.generator.as_str() {
        "automaton-or" => automaton,
        "parity-chain" => parity_chain,
        "tm-invert" => tm_invert,
        "tm-prepend-zero" => tm_prepend_zero,
        "tm-binary-decrement" => tm_binary_decrement,
        "circuit-controlled-shift" => |cx, n| circuit(cx, n, 3, 3, controlled_shift),
        "circuit-full-adder" => |cx, n| circuit(cx, n, 3, 2, full_adder),
        "circuit-2-bit-adder" => |cx, n| circuit(cx, n, 4, 3, two_bit_adder),
        "heap-access" => heap_access,
        "heap-decrement" => heap_decrement,
        "heap-list-k" => heap_list_k,
        other => return Err(ZooError::UnknownGenerator(other.to_string())),
    };
    generate(&mut cx, n)
}

/// Two initial cells; every later cell is the OR of the two before it.
fn automaton(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let steps = cx.constant("T")? as usize;
    let mut starts = [[0, 0], [0, 1], [1, 0], [1, 1]];
    starts.shuffle(&mut cx.rng);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let [a, b] = if i < starts.len() { starts[i] } else { [cx.rng.gen_range(0..2), cx.rng.gen_range(0..2)] };
        let mut tape = vec![a, b];
        while tape.len() < steps {
            let k = tape.len();
            tape.push(tape[k - 2] | tape[k - 1]);
        }
        out.push(NamedExample {
            inputs: vec![("initial_tape", vec![a, b])],
            outputs: vec![("final_tape", vec![tape[steps - 1]])],
        });
    }
    Ok(out)
}

/// A hidden bit string, observed only through the XOR of neighbours.
fn parity_chain(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let k = cx.constant("K")? as usize;
    let bits: Vec<u32> = (0..k).map(|_| cx.rng.gen_range(0..2)).collect();
    let parity: Vec<u32> = bits.windows(2).map(|w| w[0] ^ w[1]).collect();
    Ok((0..n).map(|_| NamedExample { inputs: vec![], outputs: vec![("parity", parity.clone())] }).collect())
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(0..2)).collect()
}

fn padded(mut cells: Vec<u32>, len: usize) -> Vec<u32> {
    cells.resize(len, BLANK);
    cells
}

fn tape_example(input: Vec<u32>, output: Vec<u32>, len: usize) -> NamedExample {
    NamedExample {
        inputs: vec![("input_tape", padded(input, len))],
        outputs: vec![("output_tape", padded(output, len))],
    }
}

/// Complement every bit of a string; blanks stay blank.
fn tm_invert(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let len = cx.constant("L")? as usize;
    Ok((0..n)
        .map(|_| {
            let k = cx.rng.gen_range(1..=len);
            let bits = random_bits(&mut cx.rng, k);
            let inverted = bits.iter().map(|b| 1 - b).collect();
            tape_example(bits, inverted, len)
        })
        .collect())
}

/// Insert a 0 before the string, shifting it one cell to the right.
fn tm_prepend_zero(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let len = cx.constant("L")? as usize;
    if len < 2 {
        return Err(cx.err("the tape needs at least two cells"));
    }
    Ok((0..n)
        .map(|_| {
            let k = cx.rng.gen_range(1..len);
            let bits = random_bits(&mut cx.rng, k);
            let mut shifted = vec![0];
            shifted.extend(&bits);
            tape_example(bits, shifted, len)
        })
        .collect())
}

/// Subtract one from a positive binary number written most significant bit
/// first, keeping its width.
fn tm_binary_decrement(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let len = cx.constant("L")? as usize;
    if len < 2 {
        return Err(cx.err("the tape needs at least two cells"));
    }
    let to_bits = |value: u32, width: usize| (0..width).rev().map(|i| (value >> i) & 1).collect::<Vec<u32>>();
    Ok((0..n)
        .map(|_| {
            let width = cx.rng.gen_range(1..len);
            let value = cx.rng.gen_range(1..(1u32 << width));
            tape_example(to_bits(value, width), to_bits(value - 1, width), len)
        })
        .collect())
}

/// Fredkin gate: the control bit swaps the other two.
fn controlled_shift(x: &[u32]) -> Vec<u32> {
    let (c, a, b) = (x[0], x[1], x[2]);
    if c == 1 {
        vec![c, b, a]
    } else {
        vec![c, a, b]
    }
}

/// `(a, b, carry_in)` → `(sum, carry_out)`.
fn full_adder(x: &[u32]) -> Vec<u32> {
    let total = x[0] + x[1] + x[2];
    vec![total % 2, total / 2]
}

/// Inputs `(a0, b0, a1, b1)`, least significant bits first; outputs the
/// three-bit sum `(s0, s1, s2)`.
fn two_bit_adder(x: &[u32]) -> Vec<u32> {
    let a = x[0] + 2 * x[2];
    let b = x[1] + 2 * x[3];
    let s = a + b;
    vec![s & 1, (s >> 1) & 1, (s >> 2) & 1]
}

/// Distinct input vectors in random order; repeats only once all `2^nin`
/// inputs have been used.
fn circuit(
    cx: &mut Ctx,
    n: usize,
    nin: usize,
    nout: usize,
    f: fn(&[u32]) -> Vec<u32>,
) -> Result<Vec<NamedExample>, ZooError> {
    if cx.constant("NIN")? as usize != nin || cx.constant("NOUT")? as usize != nout {
        return Err(cx.err(format!("expected {nin} input and {nout} output wires")));
    }
    let mut all: Vec<u32> = (0..1u32 << nin).collect();
    all.shuffle(&mut cx.rng);
    Ok((0..n)
        .map(|i| {
            let code = all[i % all.len()];
            let bits: Vec<u32> = (0..nin).map(|k| (code >> k) & 1).collect();
            let outputs = f(&bits);
            NamedExample { inputs: vec![("inputs", bits)], outputs: vec![("outputs", outputs)] }
        })
        .collect())
}

fn heap_example(input: Vec<u32>, output: Vec<u32>) -> NamedExample {
    NamedExample { inputs: vec![("heap_in", input)], outputs: vec![("heap_out", output)] }
}

/// Heap `[k, a_0, a_1, ...]`; the answer `a_k` replaces `k`.
fn heap_access(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let m = cx.constant("M")?;
    if m < 2 {
        return Err(cx.err("the heap needs at least two cells"));
    }
    Ok((0..n)
        .map(|_| {
            let mut heap: Vec<u32> = (0..m).map(|_| cx.rng.gen_range(0..m)).collect();
            let k = cx.rng.gen_range(0..m - 1);
            heap[0] = k;
            let mut out = heap.clone();
            out[0] = heap[k as usize + 1];
            heap_example(heap, out)
        })
        .collect())
}

/// Heap `[n, e_1, ..., e_n, ...]` with positive elements; each `e_i` is
/// decremented, everything else is left alone.
fn heap_decrement(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let m = cx.constant("M")?;
    let max_len = cx.arg("max_len", m - 1);
    if max_len == 0 || max_len >= m {
        return Err(cx.err(format!("max_len {max_len} does not fit a heap of {m} cells")));
    }
    Ok((0..n)
        .map(|_| {
            let len = cx.rng.gen_range(1..=max_len);
            let mut heap: Vec<u32> = (0..m).map(|_| cx.rng.gen_range(0..m)).collect();
            heap[0] = len;
            for cell in &mut heap[1..=len as usize] {
                *cell = cx.rng.gen_range(1..m);
            }
            let mut out = heap.clone();
            for cell in &mut out[1..=len as usize] {
                *cell -= 1;
            }
            heap_example(heap, out)
        })
        .collect())
}

/// Heap `[k, head, next, value, next, value, ...]`: a linked list whose
/// nodes occupy the pair slots in random order. The value of the k-th node
/// (0-based) replaces `k`.
fn heap_list_k(cx: &mut Ctx, n: usize) -> Result<Vec<NamedExample>, ZooError> {
    let m = cx.constant("M")?;
    if m < 4 || m % 2 != 0 {
        return Err(cx.err(format!("a heap of {m} cells cannot hold whole list nodes")));
    }
    let nodes = (m - 2) / 2;
    let max_k = cx.arg("max_k", nodes - 1);
    if max_k >= nodes {
        return Err(cx.err(format!("max_k {max_k} needs more than {nodes} nodes")));
    }
    Ok((0..n)
        .map(|_| {
            let mut order: Vec<u32> = (0..nodes).map(|i| 2 + 2 * i).collect();
            order.shuffle(&mut cx.rng);
            let k = cx.rng.gen_range(0..=max_k);
            let mut heap = vec![0; m as usize];
            heap[0] = k;
            heap[1] = order[0];
            for (i, &addr) in order.iter().enumerate() {
                heap[addr as usize] = order.get(i + 1).copied().unwrap_or(0);
                heap[addr as usize + 1] = cx.rng.gen_range(0..m);
            }
            let mut out = heap.clone();
            out[0] = heap[order[k as usize] as usize + 1];
            heap_example(heap, out)
        })
        .collect())
}
