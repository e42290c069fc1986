//! Dense k×q matrices indexed (design, context).

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid<T> {
    k: usize,
    q: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(k: usize, q: usize, v: T) -> Self {
        Grid {
            k,
            q,
            data: vec![v; k * q],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let k = rows.len();
        let q = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != q) {
            return None;
        }
        Some(Grid {
            k,
            q,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data
            .chunks(self.q.max(1))
            .map(|c| c.to_vec())
            .collect()
    }

    pub fn column(&self, l: usize) -> Vec<T> {
        (0..self.k)
            .map(|i| self.data[i * self.q + l].clone())
            .collect()
    }
}

impl<T> Grid<T> {
    pub fn from_fn(k: usize, q: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(k * q);
        for i in 0..k {
            for l in 0..q {
                data.push(f(i, l));
            }
        }
        Grid { k, q, data }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }
    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }
    #[inline]
    pub fn get(&self, i: usize, l: usize) -> &T {
        &self.data[i * self.q + l]
    }
    #[inline]
    pub fn get_mut(&mut self, i: usize, l: usize) -> &mut T {
        &mut self.data[i * self.q + l]
    }
    #[inline]
    pub fn set(&mut self, i: usize, l: usize, v: T) {
        self.data[i * self.q + l] = v;
    }
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }
    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.data.iter_mut()
    }
    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            k: self.k,
            q: self.q,
            data: self.data.iter().map(f).collect(),
        }
    }
    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.k == other.k && self.q == other.q
    }
}

impl<T> std::ops::Index<(usize, usize)> for Grid<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, l): (usize, usize)) -> &T {
        &self.data[i * self.q + l]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Grid<T> {
    #[inline]
    fn index_mut(&mut self, (i, l): (usize, usize)) -> &mut T {
        &mut self.data[i * self.q + l]
    }
}

impl<T: Serialize> Serialize for Grid<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[T]> = if self.q == 0 {
            (0..self.k).map(|_| &self.data[0..0]).collect()
        } else {
            self.data.chunks(self.q).collect()
        };
        rows.serialize(s)
    }
}

impl<'de, T: Deserialize<'de> + Clone> Deserialize<'de> for Grid<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(d)?;
        Grid::from_rows(rows).ok_or_else(|| serde::de::Error::custom("ragged matrix"))
    }
}
