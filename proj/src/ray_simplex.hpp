#pragma once

// Revised simplex specialised to the occupancy LP.
//
// For each age x the box rows 0 <= y_{x,q} <= eta_q mu_x describe a cone
// whose extreme rays are (mu_x, y_{x,.}) = (1, eta_q for q in S, 0 otherwise)
// for subsets S of the channel states. Writing every (mu_x, y_{x,.}) as a
// nonnegative combination of these rays gives an equivalent LP without the
// X_max*Q box rows: only the flow, normalization and power rows remain, so
// the basis is (X_max + 2) square. Ray columns are priced implicitly: for a
// given x the cheapest subset is {q : reduced cost of y_{x,q} < 0}.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "aoi/single_user_lp.hpp"

namespace aoi {

class RaySimplex {
public:
    explicit RaySimplex(const LpInstance& instance);

    /// Replace the y cost coefficients with a new price; the current basis
    /// stays primal feasible.
    void set_price(double W);
    /// Run to optimality from the current basis. Returns false if infeasible.
    bool solve();
    OccupancySolution solution() const;

    int x_max() const { return x_max_; }
    long pivots() const { return pivots_; }

private:
    struct Column {
        enum Kind : std::uint8_t { Ray, Slack, Artificial } kind = Artificial;
        int x = 0;               // Ray: age
        std::uint64_t mask = 0;  // Ray: subset of states (bit q-1)
        int row = 0;             // Artificial: its row
    };
    struct Entry {
        int row;
        double coef;
    };

    struct SingularBasis {};

    bool solve_from_basis();
    void reset();
    double column_cost(const Column& c) const;
    Eigen::VectorXd dense_column(const Column& c) const;
    void reinvert();
    bool run_phase();
    bool price(const Eigen::RowVectorXd& pi, Column& enter, double& best) const;
    bool price_bland(const Eigen::RowVectorXd& pi, Column& enter) const;

    ChannelModel channel_;
    int x_max_;
    int q_;
    int m_;  // rows: flow (x_max), normalization, power
    double W_;
    std::vector<double> mu_cost_;                 // by x-1
    std::vector<std::vector<Entry>> mu_col_;      // by x-1
    std::vector<std::vector<Entry>> y_col_;       // by (x-1)*Q + q-1
    int power_row_;
    Eigen::VectorXd b_;

    std::vector<Column> basis_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
    bool phase_one_ = true;
    bool feasible_ = false;
    long pivots_ = 0;
    int since_reinvert_ = 0;
};

}  // namespace aoi
