import numpy as np
from romes_closure.problems import LinearDiffusion2D, solve_fom
from romes_closure.models import offline_train, online_predict
from romes_closure.utils import ExperimentConfig

problem = LinearDiffusion2D(m=8)
config = ExperimentConfig(grid_m=8, n=2, n_perp=1, n_p=6, folds=3, grid_points=3,
                          pod_size=12, dual_size=6, romes_size=24)
package = offline_train(problem, config)

mu = problem.parameter([0.5] * 9)
state_model, qoi_model = online_predict(problem, package, mu, problem.qoi_functionals(),
                                        n_samples=50, seed=0)
u = solve_fom(problem, mu).values
print('ROM error      ', np.linalg.norm(u - state_model.rom_state) / np.linalg.norm(u))
print('ROMES error    ', np.linalg.norm(u - state_model.mean) / np.linalg.norm(u))
print('QoI mean/var   ', qoi_model.closed_form[0])
##
##

from romes_closure.models import prediction_interval

model = package.gp_models[0]
rho = package.training_data['rho'][0, 0]
mean, variance = model.posterior(rho)
lo, hi = prediction_interval(model, rho, omega=0.95)
print('posterior', mean, variance, 'interval', (lo, hi))
##
##

from romes_closure.models import OfflinePackage

package.save('./outputs/quickstart_package')
restored = OfflinePackage.load('./outputs/quickstart_package')
restored_state, _ = online_predict(problem, restored, mu)
print('restored package matches', np.allclose(restored_state.mean, state_model.mean))
