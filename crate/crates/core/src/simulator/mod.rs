//! Time-domain simulation of the wing under commanded surface schedules.

mod damage;
mod integrate;
mod io;
mod schedule;
mod sensors;

pub use damage::{inject_damage, DEFAULT_SEVERITY};
pub use integrate::{simulate, Trajectory};
pub use io::{read_recordings, read_sidecar, sidecar_path, write_recordings, RecordingSidecar};
pub use schedule::{
    make_grid_schedule, make_lhs_schedule, AngleBounds, Event, InputSchedule, ScheduleGenerator,
    ScheduleRegistry, ScheduleSpec,
};
pub use sensors::{add_noise, sensor_accel, HealthLabel, Sensor, SensorLayout, SensorRecordings};
