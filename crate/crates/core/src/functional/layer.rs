use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv,
    FullyConnected,
    MaxPool,
}

impl LayerKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::FullyConnected => "fc",
            LayerKind::MaxPool => "maxpool",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Activation {
    #[default]
    None,
    Relu,
}

/// Width, height and channel count of a 3D activation array. Tensors are laid
/// out `[y][x][c]` so that channels, and therefore bricks, are contiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub x: usize,
    pub y: usize,
    pub c: usize,
}

impl Dims {
    pub fn new(x: usize, y: usize, c: usize) -> Self {
        Self { x, y, c }
    }

    pub fn volume(&self) -> usize {
        self.x * self.y * self.c
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.y, self.x, self.c]
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.x, self.y, self.c)
    }
}

/// One layer of a linear network.
///
/// A fully-connected layer is treated as a convolution whose single filter
/// window covers the whole input array; its `filters` field is the number of
/// outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub input: Dims,
    pub filters: usize,
    pub kernel_x: usize,
    pub kernel_y: usize,
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
    pub activation: Activation,
    /// Pooling output size rounds up, clipping the last window at the edge.
    pub ceil_mode: bool,
}

impl LayerSpec {
    pub fn conv(
        name: impl Into<String>,
        input: Dims,
        filters: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Conv,
            input,
            filters,
            kernel_x: kernel,
            kernel_y: kernel,
            stride,
            pad,
            groups: 1,
            activation: Activation::None,
            ceil_mode: false,
        }
    }

    pub fn fully_connected(name: impl Into<String>, input: Dims, outputs: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::FullyConnected,
            input,
            filters: outputs,
            kernel_x: input.x,
            kernel_y: input.y,
            stride: 1,
            pad: 0,
            groups: 1,
            activation: Activation::None,
            ceil_mode: false,
        }
    }

    pub fn max_pool(name: impl Into<String>, input: Dims, kernel: usize, stride: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::MaxPool,
            input,
            filters: input.c,
            kernel_x: kernel,
            kernel_y: kernel,
            stride,
            pad: 0,
            groups: 1,
            activation: Activation::None,
            ceil_mode: false,
        }
    }

    pub fn with_relu(mut self) -> Self {
        self.activation = Activation::Relu;
        self
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn with_ceil_mode(mut self) -> Self {
        self.ceil_mode = true;
        self
    }

    pub fn is_compute(&self) -> bool {
        matches!(self.kind, LayerKind::Conv | LayerKind::FullyConnected)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::shape(&self.name, m));
        let d = self.input;
        if d.x == 0 || d.y == 0 || d.c == 0 {
            return err(format!("input dims {d} must all be >= 1"));
        }
        if self.stride == 0 || self.kernel_x == 0 || self.kernel_y == 0 {
            return err("stride and kernel must be >= 1".into());
        }
        match self.kind {
            LayerKind::Conv => {
                if self.filters == 0 {
                    return err("filter count must be >= 1".into());
                }
                if self.groups == 0 || !d.c.is_multiple_of(self.groups) || !self.filters.is_multiple_of(self.groups) {
                    return err(format!(
                        "{} groups must divide both {} channels and {} filters",
                        self.groups, d.c, self.filters
                    ));
                }
                if self.kernel_x > d.x + 2 * self.pad || self.kernel_y > d.y + 2 * self.pad {
                    return err(format!(
                        "{}x{} kernel exceeds padded input {d}",
                        self.kernel_x, self.kernel_y
                    ));
                }
            }
            LayerKind::FullyConnected => {
                if self.filters == 0 {
                    return err("output count must be >= 1".into());
                }
                if self.kernel_x != d.x || self.kernel_y != d.y || self.pad != 0 || self.groups != 1 {
                    return err("fully-connected filter must cover the whole input".into());
                }
            }
            LayerKind::MaxPool => {
                if self.kernel_x > d.x || self.kernel_y > d.y {
                    return err(format!(
                        "{}x{} pooling window exceeds input {d}",
                        self.kernel_x, self.kernel_y
                    ));
                }
            }
        }
        Ok(())
    }

    fn out_extent(&self, size: usize, kernel: usize) -> usize {
        let span = size + 2 * self.pad - kernel;
        if self.ceil_mode {
            span.div_ceil(self.stride) + 1
        } else {
            span / self.stride + 1
        }
    }

    pub fn output_dims(&self) -> Dims {
        match self.kind {
            LayerKind::FullyConnected => Dims::new(1, 1, self.filters),
            LayerKind::Conv => Dims::new(
                self.out_extent(self.input.x, self.kernel_x),
                self.out_extent(self.input.y, self.kernel_y),
                self.filters,
            ),
            LayerKind::MaxPool => Dims::new(
                self.out_extent(self.input.x, self.kernel_x),
                self.out_extent(self.input.y, self.kernel_y),
                self.input.c,
            ),
        }
    }

    /// Output positions that share one set of filter weights.
    pub fn windows(&self) -> usize {
        let o = self.output_dims();
        o.x * o.y
    }

    /// Channels each filter reads; a fully-connected layer reads the whole
    /// flattened input.
    pub fn channels_per_group(&self) -> usize {
        match self.kind {
            LayerKind::FullyConnected => self.input.volume(),
            _ => self.input.c / self.groups,
        }
    }

    pub fn filters_per_group(&self) -> usize {
        self.filters / self.groups
    }

    /// Kernel positions visited per window (1 for fully-connected layers).
    pub fn kernel_positions(&self) -> usize {
        match self.kind {
            LayerKind::FullyConnected => 1,
            _ => self.kernel_x * self.kernel_y,
        }
    }

    /// Products summed into one output value.
    pub fn terms_per_output(&self) -> usize {
        self.kernel_positions() * self.channels_per_group()
    }

    /// Bricks streamed per window: one per kernel position and channel brick.
    pub fn bricks_per_window(&self, brick: usize) -> usize {
        self.kernel_positions() * self.channels_per_group().div_ceil(brick)
    }

    pub fn macs(&self) -> u64 {
        if !self.is_compute() {
            return 0;
        }
        (self.filters * self.windows() * self.terms_per_output()) as u64
    }

    pub fn weight_count(&self) -> usize {
        if !self.is_compute() {
            return 0;
        }
        self.filters * self.terms_per_output()
    }

    /// Weight tensor shape: `[filter][ky][kx][c]`, or `[output][input]` for
    /// fully-connected layers.
    pub fn weight_shape(&self) -> Vec<usize> {
        match self.kind {
            LayerKind::Conv => vec![
                self.filters,
                self.kernel_y,
                self.kernel_x,
                self.channels_per_group(),
            ],
            LayerKind::FullyConnected => vec![self.filters, self.input.volume()],
            LayerKind::MaxPool => vec![0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_output_dims() {
        let c = LayerSpec::conv("c1", Dims::new(227, 227, 3), 96, 11, 4, 0);
        assert_eq!(c.output_dims(), Dims::new(55, 55, 96));
        assert_eq!(c.macs(), 55 * 55 * 96 * 363);
        assert_eq!(c.bricks_per_window(16), 121);
    }

    #[test]
    fn ceil_mode_pooling() {
        let p = LayerSpec::max_pool("p", Dims::new(109, 109, 96), 3, 3).with_ceil_mode();
        assert_eq!(p.output_dims().x, 37);
        let p = LayerSpec::max_pool("p", Dims::new(109, 109, 96), 3, 3);
        assert_eq!(p.output_dims().x, 36);
    }

    #[test]
    fn fully_connected_is_unit_window_conv() {
        let f = LayerSpec::fully_connected("fc6", Dims::new(6, 6, 256), 4096);
        f.validate().unwrap();
        assert_eq!(f.windows(), 1);
        assert_eq!(f.terms_per_output(), 9216);
        assert_eq!(f.bricks_per_window(16), 576);
        assert_eq!(f.output_dims(), Dims::new(1, 1, 4096));
    }

    #[test]
    fn grouped_conv() {
        let c = LayerSpec::conv("c2", Dims::new(27, 27, 96), 256, 5, 1, 2).with_groups(2);
        c.validate().unwrap();
        assert_eq!(c.channels_per_group(), 48);
        assert_eq!(c.bricks_per_window(16), 75);
        assert!(LayerSpec::conv("c", Dims::new(5, 5, 3), 4, 3, 1, 0)
            .with_groups(2)
            .validate()
            .is_err());
    }

    #[test]
    fn validation_catches_bad_dims() {
        assert!(LayerSpec::conv("c", Dims::new(2, 2, 1), 1, 3, 1, 0).validate().is_err());
        assert!(LayerSpec::conv("c", Dims::new(2, 2, 1), 1, 3, 1, 1).validate().is_ok());
        assert!(LayerSpec::max_pool("p", Dims::new(1, 1, 4), 2, 2).validate().is_err());
        assert!(LayerSpec::conv("c", Dims::new(4, 4, 1), 1, 1, 0, 0).validate().is_err());
    }
}
