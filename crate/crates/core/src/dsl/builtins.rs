//! The builtin function catalogue.
//!
//! Each entry carries a static signature (used by the kind checker) and a
//! semantics function. The catalogue is open: callers may register more
//! functions before compiling programs against it.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::Side;
use super::check::Kind;
use super::eval::{Interp, Value};
use super::DslError;
use crate::scene::{Color, Shape, Size};

/// Semantics of a builtin. Arguments are already evaluated.
pub type BuiltinFn = for<'a> fn(&mut Interp<'a>, Vec<Value<'a>>) -> Result<Value<'a>, DslError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Param {
    Is(Kind),
    /// Any set; its element kind may be referenced by a later predicate.
    AnySet,
    /// A predicate over the elements of the set passed at the given position.
    PredicateOver(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ret {
    Is(Kind),
    SameAs(usize),
}

#[derive(Clone)]
pub struct Builtin {
    pub name: &'static str,
    pub params: Vec<Param>,
    pub ret: Ret,
    pub eval: BuiltinFn,
}

impl std::fmt::Debug for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Builtin")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("ret", &self.ret)
            .finish()
    }
}

impl Builtin {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Kind of the builtin when used as a value; `None` for generic signatures.
    pub fn value_kind(&self) -> Option<Kind> {
        let params = self
            .params
            .iter()
            .map(|p| match p {
                Param::Is(k) => Some(k.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        match &self.ret {
            Ret::Is(k) => Some(Kind::Func(params, Box::new(k.clone()))),
            Ret::SameAs(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("builtin `{0}` is already registered")]
pub struct DuplicateBuiltin(pub String);

#[derive(Clone, Debug, Default)]
pub struct BuiltinCatalogue {
    entries: BTreeMap<&'static str, Builtin>,
}

impl BuiltinCatalogue {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn register(&mut self, builtin: Builtin) -> Result<(), DuplicateBuiltin> {
        if self.entries.contains_key(builtin.name) {
            return Err(DuplicateBuiltin(builtin.name.to_string()));
        }
        self.entries.insert(builtin.name, builtin);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Builtin> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The standard catalogue of scene functions.
    pub fn standard() -> Self {
        let mut c = Self::empty();
        for b in standard_entries() {
            c.register(b).expect("standard builtin names are unique");
        }
        c
    }
}

fn mismatch(name: &str, expected: &str, got: &Value<'_>) -> DslError {
    DslError::TypeMismatch {
        node: name.to_string(),
        expected: expected.to_string(),
        got: got.kind_name().to_string(),
    }
}

fn as_obj(name: &str, v: &Value<'_>) -> Result<usize, DslError> {
    match v {
        Value::Object(i) => Ok(*i),
        other => Err(mismatch(name, "object", other)),
    }
}

fn as_box(name: &str, v: &Value<'_>) -> Result<usize, DslError> {
    match v {
        Value::Box(i) => Ok(*i),
        other => Err(mismatch(name, "box", other)),
    }
}

fn as_side(name: &str, v: &Value<'_>) -> Result<Side, DslError> {
    match v {
        Value::Side(s) => Ok(*s),
        other => Err(mismatch(name, "side", other)),
    }
}

fn into_set<'a>(name: &str, v: Value<'a>) -> Result<Vec<Value<'a>>, DslError> {
    match v {
        Value::Set(items) => Ok(items),
        other => Err(mismatch(name, "set", &other)),
    }
}

fn entry(name: &'static str, params: Vec<Param>, ret: Ret, eval: BuiltinFn) -> Builtin {
    Builtin {
        name,
        params,
        ret,
        eval,
    }
}

fn obj() -> Param {
    Param::Is(Kind::Object)
}

fn ret(k: Kind) -> Ret {
    Ret::Is(k)
}

macro_rules! attr_predicate {
    ($name:literal, $field:ident, $value:expr) => {
        entry($name, vec![obj()], ret(Kind::Bool), |it, args| {
            let i = as_obj($name, &args[0])?;
            Ok(Value::Bool(it.world.obj(i).object.$field == $value))
        })
    };
}

fn standard_entries() -> Vec<Builtin> {
    vec![
        entry("all_boxes", vec![], ret(Kind::set_of(Kind::Box)), |it, _| {
            Ok(Value::Set((0..it.world.box_count()).map(Value::Box).collect()))
        }),
        entry("all_items", vec![], ret(Kind::set_of(Kind::Object)), |it, _| {
            Ok(Value::Set((0..it.world.objects.len()).map(Value::Object).collect()))
        }),
        entry(
            "all_items_in_box",
            vec![Param::Is(Kind::Box)],
            ret(Kind::set_of(Kind::Object)),
            |it, args| {
                let b = as_box("all_items_in_box", &args[0])?;
                Ok(Value::Set(it.world.box_members(b).map(Value::Object).collect()))
            },
        ),
        entry(
            "filter_obj",
            vec![Param::AnySet, Param::PredicateOver(0)],
            Ret::SameAs(0),
            |it, mut args| {
                let pred = args.pop().expect("arity checked");
                let items = into_set("filter_obj", args.pop().expect("arity checked"))?;
                let mut kept = Vec::with_capacity(items.len());
                for item in items {
                    match it.apply(&pred, vec![item.clone()])? {
                        Value::Bool(true) => kept.push(item),
                        Value::Bool(false) => {}
                        other => return Err(mismatch("filter_obj predicate", "bool", &other)),
                    }
                }
                Ok(Value::Set(kept))
            },
        ),
        entry("exist", vec![Param::AnySet], ret(Kind::Bool), |_, mut args| {
            let s = into_set("exist", args.remove(0))?;
            Ok(Value::Bool(!s.is_empty()))
        }),
        entry("count", vec![Param::AnySet], ret(Kind::Int), |_, mut args| {
            let s = into_set("count", args.remove(0))?;
            Ok(Value::Int(s.len() as i64))
        }),
        entry("unique", vec![Param::AnySet], ret(Kind::Bool), |_, mut args| {
            let s = into_set("unique", args.remove(0))?;
            Ok(Value::Bool(s.len() == 1))
        }),
        attr_predicate!("is_black", color, Color::Black),
        attr_predicate!("is_blue", color, Color::Blue),
        attr_predicate!("is_yellow", color, Color::Yellow),
        attr_predicate!("is_circle", shape, Shape::Circle),
        attr_predicate!("is_square", shape, Shape::Square),
        attr_predicate!("is_triangle", shape, Shape::Triangle),
        attr_predicate!("is_small", size, Size::Small),
        attr_predicate!("is_medium", size, Size::Medium),
        attr_predicate!("is_large", size, Size::Large),
        entry("get_color", vec![obj()], ret(Kind::Color), |it, args| {
            let i = as_obj("get_color", &args[0])?;
            Ok(Value::Color(it.world.obj(i).object.color))
        }),
        entry("get_shape", vec![obj()], ret(Kind::Shape), |it, args| {
            let i = as_obj("get_shape", &args[0])?;
            Ok(Value::Shape(it.world.obj(i).object.shape))
        }),
        entry("get_size", vec![obj()], ret(Kind::Size), |it, args| {
            let i = as_obj("get_size", &args[0])?;
            Ok(Value::Size(it.world.obj(i).object.size))
        }),
        entry(
            "get_set_colors",
            vec![Param::Is(Kind::set_of(Kind::Object))],
            ret(Kind::set_of(Kind::Color)),
            |it, mut args| {
                let s = into_set("get_set_colors", args.remove(0))?;
                let colors = s
                    .iter()
                    .map(|v| as_obj("get_set_colors", v).map(|i| Value::Color(it.world.obj(i).object.color)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::set(colors))
            },
        ),
        entry(
            "get_set_shapes",
            vec![Param::Is(Kind::set_of(Kind::Object))],
            ret(Kind::set_of(Kind::Shape)),
            |it, mut args| {
                let s = into_set("get_set_shapes", args.remove(0))?;
                let shapes = s
                    .iter()
                    .map(|v| as_obj("get_set_shapes", v).map(|i| Value::Shape(it.world.obj(i).object.shape)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::set(shapes))
            },
        ),
        entry("is_tower", vec![Param::Is(Kind::Box)], ret(Kind::Bool), |it, args| {
            let b = as_box("is_tower", &args[0])?;
            let mut members: Vec<_> = it.world.box_members(b).map(|i| it.world.obj(i)).collect();
            if members.is_empty() {
                return Ok(Value::Bool(false));
            }
            members.sort_by_key(|m| m.rect.y0);
            let first = members[0];
            let aligned = members
                .iter()
                .all(|m| m.rect.x0 == first.rect.x0 && m.rect.width() == first.rect.width());
            let stacked = members.windows(2).all(|w| w[0].rect.y1 == w[1].rect.y0);
            Ok(Value::Bool(aligned && stacked))
        }),
        entry("is_top", vec![obj()], ret(Kind::Bool), |it, args| {
            let i = as_obj("is_top", &args[0])?;
            let o = it.world.obj(i);
            let Some(b) = o.box_index else {
                return Ok(Value::Bool(false));
            };
            let top = it.world.box_members(b).map(|j| it.world.obj(j).rect.y0).min();
            Ok(Value::Bool(top == Some(o.rect.y0)))
        }),
        entry("is_bottom", vec![obj()], ret(Kind::Bool), |it, args| {
            let i = as_obj("is_bottom", &args[0])?;
            let o = it.world.obj(i);
            let Some(b) = o.box_index else {
                return Ok(Value::Bool(false));
            };
            let bottom = it.world.box_members(b).map(|j| it.world.obj(j).rect.y1).max();
            Ok(Value::Bool(bottom == Some(o.rect.y1)))
        }),
        entry(
            "is_touching_wall",
            vec![obj(), Param::Is(Kind::Side)],
            ret(Kind::Bool),
            |it, args| {
                let i = as_obj("is_touching_wall", &args[0])?;
                let side = as_side("is_touching_wall", &args[1])?;
                Ok(Value::Bool(touches_wall(it, i, side)))
            },
        ),
        entry("is_touching_any_wall", vec![obj()], ret(Kind::Bool), |it, args| {
            let i = as_obj("is_touching_any_wall", &args[0])?;
            Ok(Value::Bool(Side::ALL.iter().any(|&s| touches_wall(it, i, s))))
        }),
        entry("is_touching", vec![obj(), obj()], ret(Kind::Bool), |it, args| {
            let a = as_obj("is_touching", &args[0])?;
            let b = as_obj("is_touching", &args[1])?;
            let g = it.world.obj(a).rect.gap(&it.world.obj(b).rect);
            Ok(Value::Bool(a != b && g == 0))
        }),
        entry("is_nearly_touching", vec![obj(), obj()], ret(Kind::Bool), |it, args| {
            let a = as_obj("is_nearly_touching", &args[0])?;
            let b = as_obj("is_nearly_touching", &args[1])?;
            let g = it.world.obj(a).rect.gap(&it.world.obj(b).rect);
            let max = it.world.options.nearly_touching_max;
            Ok(Value::Bool(a != b && (1..=max).contains(&g)))
        }),
        entry("above", vec![obj(), obj()], ret(Kind::Bool), |it, args| {
            let a = as_obj("above", &args[0])?;
            let b = as_obj("above", &args[1])?;
            Ok(Value::Bool(is_above(it, a, b)))
        }),
        entry("below", vec![obj(), obj()], ret(Kind::Bool), |it, args| {
            let a = as_obj("below", &args[0])?;
            let b = as_obj("below", &args[1])?;
            Ok(Value::Bool(is_above(it, b, a)))
        }),
    ]
}

fn touches_wall(it: &Interp<'_>, i: usize, side: Side) -> bool {
    let o = it.world.obj(i);
    let Some(b) = o.box_index else {
        return false;
    };
    let wall = it.world.box_rect(b);
    match side {
        Side::Top => o.rect.y0 == wall.y0,
        Side::Bottom => o.rect.y1 == wall.y1,
        Side::Left => o.rect.x0 == wall.x0,
        Side::Right => o.rect.x1 == wall.x1,
    }
}

/// `a` lies entirely above `b` in the same box, with overlapping columns.
fn is_above(it: &Interp<'_>, a: usize, b: usize) -> bool {
    let (oa, ob) = (it.world.obj(a), it.world.obj(b));
    if a == b || oa.box_index.is_none() || oa.box_index != ob.box_index {
        return false;
    }
    let columns = oa.rect.x1.min(ob.rect.x1) - oa.rect.x0.max(ob.rect.x0);
    columns > 0 && oa.rect.y1 <= ob.rect.y0
}
