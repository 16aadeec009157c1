"""Side-effecting steps: running cells, writing reports and plots."""
