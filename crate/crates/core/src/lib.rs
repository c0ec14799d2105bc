pub mod boundeddp;
pub mod connect;
pub mod geom;
pub mod refine;
pub mod scene;
pub mod skel;
pub mod sskel;
pub mod stroke;
pub mod svg;
pub mod fixtures;
