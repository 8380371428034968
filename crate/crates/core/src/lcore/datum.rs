//! The universal value type. Programs, dialogs, responses and outcomes are all
//! `Datum`s.
//!
//! Lists are immutable cons chains with a cached structural hash and length,
//! so `tl` is O(1) and hashing or comparing large static values (whole
//! programs, in the self-application case) is cheap.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

#[derive(Clone)]
pub enum Datum {
    Atom(Rc<str>),
    Num(i64),
    Str(Rc<str>),
    List(List),
}

/// A proper list. `List::nil()` is the empty list.
#[derive(Clone, Default)]
pub struct List(Option<Rc<Cons>>);

struct Cons {
    head: Datum,
    tail: List,
    len: usize,
    hash: u64,
}

const NIL_HASH: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn str_hash(tag: u64, s: &str) -> u64 {
    // FNV-1a; stable across runs, unlike RandomState.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ tag;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix64(h)
}

impl Datum {
    pub fn atom(name: &str) -> Datum {
        Datum::Atom(Rc::from(name))
    }

    pub fn string(text: &str) -> Datum {
        Datum::Str(Rc::from(text))
    }

    pub fn nil() -> Datum {
        Datum::List(List::nil())
    }

    pub fn boolean(b: bool) -> Datum {
        Datum::atom(if b { "true" } else { "false" })
    }

    pub fn list<I: IntoIterator<Item = Datum>>(items: I) -> Datum {
        Datum::List(List::from_iter(items))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Datum::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&List> {
        match self {
            Datum::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<i64> {
        match self {
            Datum::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Datum::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Datum::Atom(a) if &**a == name)
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Datum::List(l) if l.is_empty())
    }

    /// Structural hash, stable across processes.
    pub fn structural_hash(&self) -> u64 {
        match self {
            Datum::Atom(a) => str_hash(1, a),
            Datum::Num(n) => mix64(*n as u64 ^ 0x2545_f491_4f6c_dd1d),
            Datum::Str(s) => str_hash(3, s),
            Datum::List(l) => l.structural_hash(),
        }
    }

    /// Every atom occurring anywhere inside this datum, in first-occurrence order.
    pub fn atoms(&self) -> Vec<Rc<str>> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(d) = stack.pop() {
            match d {
                Datum::Atom(a) => {
                    if seen.insert(a.clone()) {
                        out.push(a);
                    }
                }
                Datum::List(l) => {
                    let items: Vec<Datum> = l.iter().cloned().collect();
                    stack.extend(items.into_iter().rev());
                }
                _ => {}
            }
        }
        out
    }
}

impl List {
    pub fn nil() -> List {
        List(None)
    }

    pub fn cons(head: Datum, tail: List) -> List {
        let len = tail.len() + 1;
        let hash = mix64(head.structural_hash().rotate_left(17) ^ tail.structural_hash().wrapping_mul(31));
        List(Some(Rc::new(Cons { head, tail, len, hash })))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |c| c.len)
    }

    pub fn head(&self) -> Option<&Datum> {
        self.0.as_ref().map(|c| &c.head)
    }

    pub fn tail(&self) -> Option<&List> {
        self.0.as_ref().map(|c| &c.tail)
    }

    pub fn get(&self, index: usize) -> Option<&Datum> {
        self.iter().nth(index)
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter { cur: self }
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.as_ref().map_or(NIL_HASH, |c| c.hash)
    }

    fn ptr_eq(&self, other: &List) -> bool {
        match (&self.0, &other.0) {
            (Some(a), Some(b)) => Rc::ptr_eq(a, b),
            (None, None) => true,
            _ => false,
        }
    }
}

impl FromIterator<Datum> for List {
    fn from_iter<I: IntoIterator<Item = Datum>>(items: I) -> List {
        let items: Vec<Datum> = items.into_iter().collect();
        items.into_iter().rev().fold(List::nil(), |tail, head| List::cons(head, tail))
    }
}

pub struct Iter<'a> {
    cur: &'a List,
}

impl<'a> Iterator for Iter<'a> {
    type Item = &'a Datum;

    fn next(&mut self) -> Option<&'a Datum> {
        let cell = self.cur.0.as_ref()?;
        self.cur = &cell.tail;
        Some(&cell.head)
    }
}

impl<'a> IntoIterator for &'a List {
    type Item = &'a Datum;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

// Long lists would otherwise drop recursively through the tail chain.
impl Drop for List {
    fn drop(&mut self) {
        let mut next = self.0.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut cell) => next = cell.tail.0.take(),
                Err(_) => break,
            }
        }
    }
}

impl PartialEq for List {
    fn eq(&self, other: &List) -> bool {
        let (mut a, mut b) = (self, other);
        loop {
            if a.ptr_eq(b) {
                return true;
            }
            match (&a.0, &b.0) {
                (Some(x), Some(y)) => {
                    if x.hash != y.hash || x.len != y.len || x.head != y.head {
                        return false;
                    }
                    a = &x.tail;
                    b = &y.tail;
                }
                _ => return false,
            }
        }
    }
}

impl Eq for List {}

impl PartialEq for Datum {
    fn eq(&self, other: &Datum) -> bool {
        match (self, other) {
            (Datum::Atom(a), Datum::Atom(b)) => a == b,
            (Datum::Num(a), Datum::Num(b)) => a == b,
            (Datum::Str(a), Datum::Str(b)) => a == b,
            (Datum::List(a), Datum::List(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Datum {}

impl Hash for Datum {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.structural_hash());
    }
}

impl fmt::Debug for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_datum(self))
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_datum(self))
    }
}

impl fmt::Debug for List {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

impl From<i64> for Datum {
    fn from(n: i64) -> Datum {
        Datum::Num(n)
    }
}

impl From<List> for Datum {
    fn from(l: List) -> Datum {
        Datum::List(l)
    }
}
