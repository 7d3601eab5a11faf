#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "fletchsim/sim_time.hpp"

namespace fletchsim {

// Discrete-event core: a priority queue keyed by (time, insertion seq).
// The sequence tiebreak makes simultaneous events run in scheduling
// order, so a run is a pure function of its inputs.
class EventQueue {
  public:
    void at(SimTime t, std::function<void()> fn) {
        heap_.push(Event{t < now_ ? now_ : t, next_seq_++, std::move(fn)});
    }

    void after(SimTime delay, std::function<void()> fn) {
        at(now_ + delay, std::move(fn));
    }

    bool empty() const { return heap_.empty(); }
    SimTime now() const { return now_; }
    uint64_t executed() const { return executed_; }

    // Runs one event; returns false when the queue is empty.
    bool step() {
        if (heap_.empty()) return false;
        // std::priority_queue::top is const; the handler is moved out
        // via the mutable member.
        const Event& ev = heap_.top();
        now_ = ev.time;
        auto fn = std::move(ev.fn);
        heap_.pop();
        ++executed_;
        fn();
        return true;
    }

  private:
    struct Event {
        SimTime time;
        uint64_t seq;
        mutable std::function<void()> fn;
        bool operator>(const Event& o) const {
            if (time != o.time) return time > o.time;
            return seq > o.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> heap_;
    SimTime now_ = 0;
    uint64_t next_seq_ = 0;
    uint64_t executed_ = 0;
};

}  // namespace fletchsim
