# Kfino - Kalman filtering with impulse-noised outliers
