// Small experiment used by the harness and CLI tests; runs in well under a second.

#pragma once

#include <string>

#include "xlmimo/harness.hpp"

namespace xt
{

inline xlmimo::ExperimentConfig tiny_config()
{
    xlmimo::ExperimentConfig c;
    c.name = "tiny";
    c.geometry.bs_h = 4;
    c.geometry.bs_v = 8;
    c.geometry.tiles_h = 2;
    c.geometry.tiles_v = 2;
    c.geometry.rf_chains = 8;
    c.geometry.antennas_per_chain = 4;
    c.geometry.slots = 4;
    c.scene.user_min = xlmimo::Vec3(1.0, -0.5, -0.2);
    c.scene.user_max = xlmimo::Vec3(2.0, 0.5, -0.2);
    c.estimator.angular_grid = 8;
    c.estimator.count_x = 3;
    c.estimator.count_y = 3;
    c.estimator.count_z = 1;
    c.estimator.spherical_angle_grid = 6;
    c.estimator.spherical_rings = 2;
    c.estimator.ring_min = 1.0;
    c.estimator.ring_max = 3.0;
    c.estimator.sbl.max_iters = 30;
    c.sweep.methods = xlmimo::known_methods();
    c.sweep.snr_db = {10.0};
    c.sweep.trials = 2;
    c.sweep.base_seed = 5;
    return c;
}

} // namespace xt
