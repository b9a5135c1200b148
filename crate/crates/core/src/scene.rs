//! Geometric world model: objects placed in three box regions of a fixed canvas.
//!
//! All coordinates are integer pixels with the origin at the top-left corner of
//! the canvas; `y` grows downwards. Rectangles are half-open.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
    Triangle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Black,
    Blue,
    Yellow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Small,
    Medium,
    Large,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Triangle];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Square => "square",
            Shape::Triangle => "triangle",
        }
    }
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Black, Color::Blue, Color::Yellow];

    pub fn name(self) -> &'static str {
        match self {
            Color::Black => "black",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
        }
    }
}

impl Size {
    pub const ALL: [Size; 3] = [Size::Small, Size::Medium, Size::Large];

    pub fn name(self) -> &'static str {
        match self {
            Size::Small => "small",
            Size::Medium => "medium",
            Size::Large => "large",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Environment appearance: constrained stacks of squares, or free placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Tower,
    Scatter,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Tower => "tower",
            Variant::Scatter => "scatter",
        })
    }
}

/// Half-open axis-aligned rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rect {
    pub const fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn contains_point(&self, x: i32, y: i32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Area of the intersection, zero when the rectangles are disjoint or only touch.
    pub fn intersection_area(&self, other: &Rect) -> i64 {
        let w = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0) as i64;
        let h = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0) as i64;
        w * h
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.intersection_area(other) > 0
    }

    /// Chebyshev separation of two rectangles: the larger of the horizontal and
    /// vertical gaps. Returns 0 when the rectangles touch (edge or corner) and
    /// -1 when their interiors intersect.
    pub fn gap(&self, other: &Rect) -> i32 {
        let dx = (other.x0 - self.x1).max(self.x0 - other.x1);
        let dy = (other.y0 - self.y1).max(self.y0 - other.y1);
        let d = dx.max(dy);
        if d < 0 {
            -1
        } else {
            d
        }
    }
}

/// Pixel side lengths for the three object sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SizeTable {
    pub small: i32,
    pub medium: i32,
    pub large: i32,
}

impl Default for SizeTable {
    fn default() -> Self {
        SizeTable {
            small: 10,
            medium: 20,
            large: 30,
        }
    }
}

impl SizeTable {
    pub fn px(&self, size: Size) -> i32 {
        [self.small, self.medium, self.large][size.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("canvas width {width} minus two separators of {separator} px is not divisible into three boxes")]
    UnevenBoxes { width: i32, separator: i32 },
    #[error("object sizes must be positive and strictly increasing (small < medium < large)")]
    SizeOrdering,
    #[error("large objects ({large} px) must fit inside a {box_width}x{height} box")]
    LargeDoesNotFit { large: i32, box_width: i32, height: i32 },
    #[error("a four-block tower of {medium} px squares does not fit in a box of height {height}")]
    TowerDoesNotFit { medium: i32, height: i32 },
}

/// Canvas geometry shared by every scene of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub canvas_width: i32,
    pub canvas_height: i32,
    pub separator_width: i32,
    pub sizes: SizeTable,
}

/// Number of box regions on the canvas.
pub const BOX_COUNT: usize = 3;
/// Maximum number of blocks in a tower.
pub const MAX_TOWER_HEIGHT: usize = 4;

impl Default for Layout {
    fn default() -> Self {
        Layout {
            canvas_width: 380,
            canvas_height: 100,
            separator_width: 10,
            sizes: SizeTable::default(),
        }
    }
}

impl Layout {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let inner = self.canvas_width - 2 * self.separator_width;
        if inner <= 0 || inner % 3 != 0 || self.separator_width < 0 {
            return Err(LayoutError::UnevenBoxes {
                width: self.canvas_width,
                separator: self.separator_width,
            });
        }
        let s = self.sizes;
        if !(0 < s.small && s.small < s.medium && s.medium < s.large) {
            return Err(LayoutError::SizeOrdering);
        }
        let box_width = self.box_width();
        if s.large >= box_width || s.large >= self.canvas_height {
            return Err(LayoutError::LargeDoesNotFit {
                large: s.large,
                box_width,
                height: self.canvas_height,
            });
        }
        if s.medium * MAX_TOWER_HEIGHT as i32 > self.canvas_height {
            return Err(LayoutError::TowerDoesNotFit {
                medium: s.medium,
                height: self.canvas_height,
            });
        }
        Ok(())
    }

    pub fn canvas(&self) -> Rect {
        Rect::new(0, 0, self.canvas_width, self.canvas_height)
    }

    pub fn box_width(&self) -> i32 {
        (self.canvas_width - 2 * self.separator_width) / 3
    }

    pub fn box_rect(&self, index: usize) -> Rect {
        debug_assert!(index < BOX_COUNT);
        let x0 = index as i32 * (self.box_width() + self.separator_width);
        Rect::new(x0, 0, x0 + self.box_width(), self.canvas_height)
    }

    pub fn box_rects(&self) -> [Rect; BOX_COUNT] {
        [self.box_rect(0), self.box_rect(1), self.box_rect(2)]
    }

    /// Separator bands between adjacent boxes.
    pub fn separator_rects(&self) -> [Rect; 2] {
        let b0 = self.box_rect(0);
        let b1 = self.box_rect(1);
        [
            Rect::new(b0.x1, 0, b0.x1 + self.separator_width, self.canvas_height),
            Rect::new(b1.x1, 0, b1.x1 + self.separator_width, self.canvas_height),
        ]
    }

    pub fn size_px(&self, size: Size) -> i32 {
        self.sizes.px(size)
    }

    pub fn rect_at(&self, x: i32, y: i32, size: Size) -> Rect {
        let s = self.size_px(size);
        Rect::new(x, y, x + s, y + s)
    }

    /// Index of the box that fully contains `rect`, if any.
    pub fn containing_box(&self, rect: &Rect) -> Option<usize> {
        self.box_rects().iter().position(|b| b.contains_rect(rect))
    }

    /// Index of the box whose interior contains the pixel, if any.
    pub fn box_at(&self, x: i32, y: i32) -> Option<usize> {
        self.box_rects().iter().position(|b| b.contains_point(x, y))
    }

    /// Left edge of a tower block in box `index`.
    pub fn tower_x(&self, index: usize) -> i32 {
        let b = self.box_rect(index);
        b.x0 + (b.width() - self.sizes.medium) / 2
    }

    /// Top edge of the tower block at `level` (0 = floor) in any box.
    pub fn tower_y(&self, level: usize) -> i32 {
        self.canvas_height - self.sizes.medium * (level as i32 + 1)
    }
}

/// An object on the canvas. `(x, y)` is the top-left corner of its bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PlacedObject {
    pub id: u32,
    pub shape: Shape,
    pub color: Color,
    pub size: Size,
    pub x: i32,
    pub y: i32,
}

impl PlacedObject {
    pub fn bounding_box(&self, layout: &Layout) -> Rect {
        layout.rect_at(self.x, self.y, self.size)
    }

    /// Ordering key that ignores the id.
    pub fn canonical_key(&self) -> (i32, i32, Shape, Color, Size) {
        (self.x, self.y, self.shape, self.color, self.size)
    }
}

/// Attributes of an object that is about to be placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub color: Color,
    pub size: Size,
}

pub fn bounding_box(obj: &PlacedObject, layout: &Layout) -> Rect {
    obj.bounding_box(layout)
}

/// Chebyshev gap between two objects' bounding boxes: 0 when touching, -1 when overlapping.
pub fn gap(a: &PlacedObject, b: &PlacedObject, layout: &Layout) -> i32 {
    a.bounding_box(layout).gap(&b.bounding_box(layout))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("object {id} at ({x}, {y}) is not inside a single box")]
    OutOfBounds { id: u32, x: i32, y: i32 },
    #[error("objects {a} and {b} overlap")]
    Overlap { a: u32, b: u32 },
    #[error("duplicate object id {0}")]
    DuplicateId(u32),
    #[error("tower object {id} is not a medium square")]
    TowerShape { id: u32 },
    #[error("tower object {id} is not centered in its box")]
    TowerNotCentered { id: u32 },
    #[error("box {index} does not hold a floor-anchored stack")]
    TowerNotStacked { index: usize },
    #[error("box {index} holds {height} blocks, more than {max}", max = MAX_TOWER_HEIGHT)]
    TowerTooTall { index: usize, height: usize },
    #[error("scene variant {found} does not match expected {expected}")]
    VariantMismatch { expected: Variant, found: Variant },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// A world state: an ordered collection of objects on a canvas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scene {
    pub layout: Layout,
    pub variant: Variant,
    objects: Vec<PlacedObject>,
}

impl Scene {
    pub fn empty(variant: Variant, layout: Layout) -> Self {
        Scene {
            layout,
            variant,
            objects: Vec::new(),
        }
    }

    /// Builds a scene from attribute/position tuples, assigning ids in order.
    pub fn from_objects(
        variant: Variant,
        layout: Layout,
        objects: impl IntoIterator<Item = (ObjectSpec, i32, i32)>,
    ) -> Self {
        let mut scene = Scene::empty(variant, layout);
        for (spec, x, y) in objects {
            scene.insert(spec, x, y);
        }
        scene
    }

    pub fn objects(&self) -> &[PlacedObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&PlacedObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    fn next_id(&self) -> u32 {
        self.objects.iter().map(|o| o.id + 1).max().unwrap_or(0)
    }

    /// Appends an object without checking validity. Returns its id.
    pub fn insert(&mut self, spec: ObjectSpec, x: i32, y: i32) -> u32 {
        let id = self.next_id();
        self.objects.push(PlacedObject {
            id,
            shape: spec.shape,
            color: spec.color,
            size: spec.size,
            x,
            y,
        });
        id
    }

    pub fn remove(&mut self, id: u32) -> Option<PlacedObject> {
        let pos = self.objects.iter().position(|o| o.id == id)?;
        Some(self.objects.remove(pos))
    }

    pub fn bounding_box(&self, obj: &PlacedObject) -> Rect {
        obj.bounding_box(&self.layout)
    }

    pub fn box_of(&self, obj: &PlacedObject) -> Option<usize> {
        self.layout.containing_box(&self.bounding_box(obj))
    }

    /// Objects whose bounding box lies in box `index`.
    pub fn objects_in_box(&self, index: usize) -> impl Iterator<Item = &PlacedObject> {
        let rect = self.layout.box_rect(index);
        self.objects
            .iter()
            .filter(move |o| rect.contains_rect(&o.bounding_box(&self.layout)))
    }

    /// Tower stack of box `index`, bottom block first.
    pub fn tower_stack(&self, index: usize) -> Vec<&PlacedObject> {
        let mut stack: Vec<_> = self.objects_in_box(index).collect();
        stack.sort_by_key(|o| std::cmp::Reverse(o.y));
        stack
    }

    /// Object whose bounding box covers the pixel `(x, y)`.
    pub fn object_at(&self, x: i32, y: i32) -> Option<&PlacedObject> {
        self.objects
            .iter()
            .find(|o| self.bounding_box(o).contains_point(x, y))
    }

    /// True if an object of the given size can be placed at `(x, y)` without
    /// crossing a separator or the canvas edge and without overlapping.
    pub fn fits(&self, x: i32, y: i32, size: Size) -> bool {
        let rect = self.layout.rect_at(x, y, size);
        self.layout.containing_box(&rect).is_some()
            && self.objects.iter().all(|o| !self.bounding_box(o).overlaps(&rect))
    }

    /// Objects sorted by their canonical key, independent of insertion order.
    pub fn canonical_objects(&self) -> Vec<PlacedObject> {
        let mut objs = self.objects.clone();
        objs.sort_by_key(|o| (o.canonical_key(), o.id));
        objs
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.layout.validate()?;
        for (i, a) in self.objects.iter().enumerate() {
            if self.box_of(a).is_none() {
                return Err(SceneError::OutOfBounds {
                    id: a.id,
                    x: a.x,
                    y: a.y,
                });
            }
            for b in &self.objects[i + 1..] {
                if a.id == b.id {
                    return Err(SceneError::DuplicateId(a.id));
                }
                if self.bounding_box(a).overlaps(&self.bounding_box(b)) {
                    return Err(SceneError::Overlap { a: a.id, b: b.id });
                }
            }
        }
        if self.variant == Variant::Tower {
            self.validate_tower()?;
        }
        Ok(())
    }

    fn validate_tower(&self) -> Result<(), SceneError> {
        for o in &self.objects {
            if o.shape != Shape::Square || o.size != Size::Medium {
                return Err(SceneError::TowerShape { id: o.id });
            }
        }
        for index in 0..BOX_COUNT {
            let stack = self.tower_stack(index);
            if stack.len() > MAX_TOWER_HEIGHT {
                return Err(SceneError::TowerTooTall {
                    index,
                    height: stack.len(),
                });
            }
            let x = self.layout.tower_x(index);
            for (level, o) in stack.iter().enumerate() {
                if o.x != x {
                    return Err(SceneError::TowerNotCentered { id: o.id });
                }
                if o.y != self.layout.tower_y(level) {
                    return Err(SceneError::TowerNotStacked { index });
                }
            }
        }
        Ok(())
    }

    /// Deterministic 64-bit digest, invariant to object insertion order and ids.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut hasher = Sha256::new();
        hasher.update([self.variant as u8]);
        for o in self.canonical_objects() {
            hasher.update(o.x.to_le_bytes());
            hasher.update(o.y.to_le_bytes());
            hasher.update([o.shape as u8, o.color as u8, o.size as u8]);
        }
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        Fingerprint(u64::from_le_bytes(bytes))
    }

    pub fn to_json(&self) -> SceneJson {
        SceneJson {
            variant: self.variant,
            objects: self
                .objects
                .iter()
                .map(|o| ObjectJson {
                    shape: o.shape,
                    color: o.color,
                    size: o.size,
                    x: o.x,
                    y: o.y,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &SceneJson, layout: Layout) -> Self {
        Scene::from_objects(
            json.variant,
            layout,
            json.objects.iter().map(|o| {
                (
                    ObjectSpec {
                        shape: o.shape,
                        color: o.color,
                        size: o.size,
                    },
                    o.x,
                    o.y,
                )
            }),
        )
    }
}

pub fn scene_fingerprint(scene: &Scene) -> Fingerprint {
    scene.fingerprint()
}

/// Canonical scene digest. Serialized as 16 lowercase hex digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint(pub u64);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(Fingerprint)
            .map_err(serde::de::Error::custom)
    }
}

/// Wire form of a scene. Layout travels separately (dataset header).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneJson {
    pub variant: Variant,
    pub objects: Vec<ObjectJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectJson {
    pub shape: Shape,
    pub color: Color,
    pub size: Size,
    pub x: i32,
    pub y: i32,
}

impl Serialize for Scene {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scene {
    /// Deserializes with the default layout; use [`Scene::from_json`] for others.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = SceneJson::deserialize(d)?;
        Ok(Scene::from_json(&json, Layout::default()))
    }
}
