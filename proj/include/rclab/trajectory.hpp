#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rclab/diagnostics.hpp"
#include "rclab/grid.hpp"

namespace rclab {

struct Frame {
    double time = 0.0;
    std::size_t step = 0;
    ScalarField u;
    ScalarField v;
};

/// Time-ordered snapshots of (u, v) with the diagnostics recorded at the same instants.
class TrajectoryStore {
public:
    TrajectoryStore(GridPtr grid, double epsilon) : grid_(std::move(grid)), epsilon_(epsilon) {}

    const TensorGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    double epsilon() const noexcept { return epsilon_; }

    void add(Frame frame, std::optional<DiagnosticsRecord> record = std::nullopt) {
        if (!frames_.empty() && !(frame.time > frames_.back().time)) {
            throw InvalidArgument("trajectory: frames must be strictly increasing in time");
        }
        if (!(frame.u.grid() == *grid_) || !(frame.v.grid() == *grid_)) {
            throw DimensionMismatch("trajectory: frame grid differs from store grid");
        }
        if (record) records_.push_back(*record);
        frames_.push_back(std::move(frame));
    }

    const std::vector<Frame>& frames() const noexcept { return frames_; }
    const std::vector<DiagnosticsRecord>& records() const noexcept { return records_; }
    bool has_records() const noexcept { return !records_.empty() && records_.size() == frames_.size(); }

    std::size_t size() const noexcept { return frames_.size(); }
    bool empty() const noexcept { return frames_.empty(); }
    const Frame& front() const { return frames_.front(); }
    const Frame& back() const { return frames_.back(); }

    std::vector<double> times() const {
        std::vector<double> t;
        t.reserve(frames_.size());
        for (const auto& f : frames_) t.push_back(f.time);
        return t;
    }

    double max_u() const {
        double m = 0.0;
        for (const auto& f : frames_) m = std::max(m, f.u.max());
        return m;
    }
    double min_u() const {
        double m = frames_.front().u.min();
        for (const auto& f : frames_) m = std::min(m, f.u.min());
        return m;
    }

private:
    GridPtr grid_;
    double epsilon_;
    std::vector<Frame> frames_;
    std::vector<DiagnosticsRecord> records_;
};

}  // namespace rclab
