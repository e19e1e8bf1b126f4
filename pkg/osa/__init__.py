# Multichannel opportunistic access: (k,m) restless bandit library
