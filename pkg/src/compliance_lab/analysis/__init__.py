"""Monte Carlo estimation, cone exploration, closed-form bounds and attack accounting."""
